//! Maps on the nonnegative cone that carry declared order properties, and the
//! combinators that propagate those properties.
//!
//! A [`ConeMap`] is a closure `R_+^s -> R_+^p` plus a set of [`Properties`]
//! it claims. The combinators (`combine_sum`, `combine_max`, `combine_min`,
//! `combine_compose`) build new maps and declare exactly the properties that
//! the composition rules guarantee. The sampling oracles in [`crate::oracle`]
//! exist to try to refute those declarations.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;
use crate::classify::classify;
use crate::error::{dim_mismatch, Error, Result};
use crate::network::{ConeOperator, Network};
use crate::EPS_POS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Monotonic,
    WeaklyScalable,
    Scalable,
    StrictlyMonotonic,
    StronglyMonotonic,
}

impl Property {
    pub const ALL: [Property; 5] = [
        Property::Monotonic,
        Property::WeaklyScalable,
        Property::Scalable,
        Property::StrictlyMonotonic,
        Property::StronglyMonotonic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Monotonic => "monotonic",
            Property::WeaklyScalable => "weakly_scalable",
            Property::Scalable => "scalable",
            Property::StrictlyMonotonic => "strictly_monotonic",
            Property::StronglyMonotonic => "strongly_monotonic",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Declared property set. Constructors close it under the implications
/// strongly => strictly => monotonic and scalable => weakly scalable.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Properties {
    pub monotonic: bool,
    pub weakly_scalable: bool,
    pub scalable: bool,
    pub strictly_monotonic: bool,
    pub strongly_monotonic: bool,
}

impl Properties {
    pub fn closed(mut self) -> Self {
        self.strictly_monotonic |= self.strongly_monotonic;
        self.monotonic |= self.strictly_monotonic;
        self.weakly_scalable |= self.scalable;
        self
    }

    pub fn has(&self, p: Property) -> bool {
        match p {
            Property::Monotonic => self.monotonic,
            Property::WeaklyScalable => self.weakly_scalable,
            Property::Scalable => self.scalable,
            Property::StrictlyMonotonic => self.strictly_monotonic,
            Property::StronglyMonotonic => self.strongly_monotonic,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Property> + '_ {
        Property::ALL.into_iter().filter(|p| self.has(*p))
    }
}

pub type MapFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub struct ConeMap {
    eval: MapFn,
    input_dim: usize,
    output_dim: usize,
    declared: Properties,
    label: String,
}

impl fmt::Debug for ConeMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConeMap")
            .field("label", &self.label)
            .field("dims", &(self.input_dim, self.output_dim))
            .field("declared", &self.declared)
            .finish()
    }
}

impl ConeOperator for ConeMap {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (self.eval)(x)
    }
}

impl ConeMap {
    pub fn new(
        label: impl Into<String>,
        input_dim: usize,
        output_dim: usize,
        declared: Properties,
        eval: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            eval: Arc::new(eval),
            input_dim,
            output_dim,
            declared: declared.closed(),
            label: label.into(),
        }
    }

    pub fn declared(&self) -> Properties {
        self.declared
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.eval)(x)
    }

    pub fn identity(dim: usize) -> Self {
        let declared = Properties {
            weakly_scalable: true,
            strictly_monotonic: true,
            strongly_monotonic: dim == 1,
            ..Default::default()
        };
        Self::new("id", dim, dim, declared, |x| x.to_vec())
    }

    /// `x -> W x` for a nonnegative `W`.
    pub fn linear(w: DMatrix<f64>) -> Result<Self> {
        if let Some(&value) = w.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::NegativeEntry { row: 0, col: 0, value });
        }
        let rows = w.row_iter().all(|r| r.iter().any(|&v| v > EPS_POS));
        let cols = w.column_iter().all(|c| c.iter().any(|&v| v > EPS_POS));
        let declared = Properties {
            monotonic: true,
            weakly_scalable: true,
            strictly_monotonic: rows && cols,
            strongly_monotonic: w.iter().all(|&v| v > EPS_POS),
            ..Default::default()
        };
        let (p, s) = w.shape();
        let label = format!("linear{p}x{s}");
        Ok(Self::new(label, s, p, declared, move |x| {
            (&w * DVector::from_column_slice(x)).data.into()
        }))
    }

    /// `x -> x + b` for `b >= 0`.
    pub fn add_bias(b: Vec<f64>) -> Result<Self> {
        if let Some(&value) = b.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::NegativeEntry { row: 0, col: 0, value });
        }
        let dim = b.len();
        let declared = Properties {
            weakly_scalable: true,
            scalable: b.iter().all(|&v| v > EPS_POS),
            strictly_monotonic: true,
            strongly_monotonic: dim == 1,
            ..Default::default()
        };
        Ok(Self::new("bias", dim, dim, declared, move |x| {
            x.iter().zip(&b).map(|(a, c)| a + c).collect()
        }))
    }

    /// Constant map `x -> c` on `R_+^input_dim`.
    pub fn constant(input_dim: usize, c: Vec<f64>) -> Self {
        let declared = Properties {
            monotonic: true,
            weakly_scalable: c.iter().all(|&v| v >= 0.0),
            scalable: c.iter().all(|&v| v > EPS_POS),
            ..Default::default()
        };
        let p = c.len();
        Self::new("const", input_dim, p, declared, move |_| c.clone())
    }

    /// The scalar activation applied to each coordinate.
    pub fn activation(kind: ActivationKind, dim: usize) -> Self {
        let strict = kind.strictly_monotone_on_nonneg();
        let declared = Properties {
            monotonic: true,
            weakly_scalable: kind.concave_on_nonneg(),
            scalable: kind.scalable_alone(),
            strictly_monotonic: strict,
            strongly_monotonic: strict && dim == 1,
        };
        Self::new(kind.name(), dim, dim, declared, move |x| {
            x.iter().map(|&v| kind.eval(v)).collect()
        })
    }

    /// A network viewed as a cone map, declaring its structural class.
    pub fn from_network(net: Network) -> Self {
        let level = classify(&net).level;
        let declared = Properties {
            monotonic: level.is_weakly_scalable(),
            weakly_scalable: level.is_weakly_scalable(),
            scalable: level.is_scalable(),
            ..Default::default()
        };
        let (s, p) = (net.input_dim(), net.output_dim());
        Self::new("network", s, p, declared, move |x| net.apply(x))
    }

    /// Coordinate `j` of `f` as a scalar-valued map. Coordinates inherit every
    /// property except strictness, which is a statement about all outputs.
    pub fn coordinate(f: &ConeMap, j: usize) -> Result<Self> {
        if j >= f.output_dim {
            return Err(dim_mismatch("coordinate index", f.output_dim, j));
        }
        let inner = f.eval.clone();
        let declared = Properties {
            monotonic: f.declared.monotonic,
            weakly_scalable: f.declared.weakly_scalable,
            scalable: f.declared.scalable,
            ..Default::default()
        };
        Ok(Self::new(
            format!("{}[{j}]", f.label),
            f.input_dim,
            1,
            declared,
            move |x| vec![inner(x)[j]],
        ))
    }
}

fn same_dims(f1: &ConeMap, f2: &ConeMap) -> Result<()> {
    if f1.input_dim != f2.input_dim {
        return Err(dim_mismatch("combinator input", f1.input_dim, f2.input_dim));
    }
    if f1.output_dim != f2.output_dim {
        return Err(dim_mismatch("combinator output", f1.output_dim, f2.output_dim));
    }
    Ok(())
}

/// `x -> alpha f1(x) + beta f2(x)` with `alpha, beta >= 0`.
pub fn combine_sum(f1: &ConeMap, f2: &ConeMap, alpha: f64, beta: f64) -> Result<ConeMap> {
    same_dims(f1, f2)?;
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::InvalidConfig(format!("{name} must be finite and >= 0, got {v}")));
        }
    }
    let (a, b) = (f1.declared, f2.declared);
    let declared = Properties {
        monotonic: a.monotonic && b.monotonic,
        weakly_scalable: a.weakly_scalable && b.weakly_scalable,
        scalable: (a.weakly_scalable && b.scalable && beta > 0.0) || (b.weakly_scalable && a.scalable && alpha > 0.0),
        ..Default::default()
    };
    let (e1, e2) = (f1.eval.clone(), f2.eval.clone());
    Ok(ConeMap::new(
        format!("({alpha:.3}*{} + {beta:.3}*{})", f1.label, f2.label),
        f1.input_dim,
        f1.output_dim,
        declared,
        move |x| e1(x).iter().zip(e2(x)).map(|(u, v)| alpha * u + beta * v).collect(),
    ))
}

fn lattice(f1: &ConeMap, f2: &ConeMap, name: &str, pick: fn(f64, f64) -> f64) -> Result<ConeMap> {
    same_dims(f1, f2)?;
    let (a, b) = (f1.declared, f2.declared);
    let declared = Properties {
        monotonic: a.monotonic && b.monotonic,
        weakly_scalable: a.weakly_scalable && b.weakly_scalable,
        scalable: a.scalable && b.scalable,
        ..Default::default()
    };
    let (e1, e2) = (f1.eval.clone(), f2.eval.clone());
    Ok(ConeMap::new(
        format!("{name}({}, {})", f1.label, f2.label),
        f1.input_dim,
        f1.output_dim,
        declared,
        move |x| e1(x).iter().zip(e2(x)).map(|(&u, v)| pick(u, v)).collect(),
    ))
}

/// Coordinatewise maximum.
pub fn combine_max(f1: &ConeMap, f2: &ConeMap) -> Result<ConeMap> {
    lattice(f1, f2, "max", f64::max)
}

/// Coordinatewise minimum.
pub fn combine_min(f1: &ConeMap, f2: &ConeMap) -> Result<ConeMap> {
    lattice(f1, f2, "min", f64::min)
}

/// `x -> g(f1(x))`.
pub fn combine_compose(g: &ConeMap, f1: &ConeMap) -> Result<ConeMap> {
    if f1.output_dim != g.input_dim {
        return Err(dim_mismatch("composition", g.input_dim, f1.output_dim));
    }
    let (f, g_p) = (f1.declared, g.declared);
    let declared = Properties {
        monotonic: f.monotonic && g_p.monotonic,
        strictly_monotonic: f.strictly_monotonic && g_p.strictly_monotonic,
        strongly_monotonic: f.strongly_monotonic && g_p.strongly_monotonic,
        weakly_scalable: f.weakly_scalable && g_p.weakly_scalable && g_p.monotonic,
        scalable: (f.weakly_scalable && g_p.scalable && g_p.monotonic)
            || (f.scalable && g_p.weakly_scalable && g_p.strictly_monotonic),
    };
    let (eg, ef) = (g.eval.clone(), f1.eval.clone());
    Ok(ConeMap::new(
        format!("{}o{}", g.label, f1.label),
        f1.input_dim,
        g.output_dim,
        declared,
        move |x| eg(&ef(x)),
    ))
}

/// A random combinator tree of self-maps on `R_+^dim`.
///
/// Leaves are nonnegative linear maps (row sums at most one), bias shifts
/// (sometimes zero), and coordinatewise sigmoid, tanh or ReLU. Inner nodes
/// are sums with coefficients in `[0, 0.5]` (the second one zero a fifth of the
/// time), maxima, minima and compositions. Output magnitudes stay within a
/// small multiple of the input box, which keeps saturating activations away
/// from the region where `f64` can no longer resolve their increase.
pub fn random_tree<R: Rng>(rng: &mut R, dim: usize, depth: usize) -> ConeMap {
    if depth == 0 || rng.gen_bool(0.25) {
        return random_leaf(rng, dim);
    }
    let f1 = random_tree(rng, dim, depth - 1);
    let f2 = random_tree(rng, dim, depth - 1);
    match rng.gen_range(0..4) {
        0 => {
            let alpha = rng.gen_range(0.0..0.5);
            let beta = if rng.gen_bool(0.2) {
                0.0
            } else {
                rng.gen_range(0.05..0.5)
            };
            combine_sum(&f1, &f2, alpha, beta).expect("matching dims")
        }
        1 => combine_max(&f1, &f2).expect("matching dims"),
        2 => combine_min(&f1, &f2).expect("matching dims"),
        _ => combine_compose(&f1, &f2).expect("matching dims"),
    }
}

fn random_leaf<R: Rng>(rng: &mut R, dim: usize) -> ConeMap {
    match rng.gen_range(0..6) {
        0 => {
            let w = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(0.05..1.0) / dim as f64);
            ConeMap::linear(w).expect("nonnegative")
        }
        1 => {
            let b = if rng.gen_bool(0.3) {
                vec![0.0; dim]
            } else {
                (0..dim).map(|_| rng.gen_range(0.05..0.5)).collect()
            };
            ConeMap::add_bias(b).expect("nonnegative")
        }
        2 => ConeMap::activation(ActivationKind::Sigmoid, dim),
        3 => ConeMap::activation(ActivationKind::Tanh, dim),
        4 => ConeMap::activation(ActivationKind::Relu, dim),
        _ => ConeMap::identity(dim),
    }
}
