//! Existence and uniqueness verdicts for fixed points of a network.
//!
//! [`certify`] combines the structural class, the asymptotic map and its
//! spectral radius, and the `T^m(0) >> 0` test:
//!
//! | spectral radius | condition                               | verdict                    |
//! |-----------------|-----------------------------------------|----------------------------|
//! | within 1e-9 of 1| any                                     | `Inconclusive`             |
//! | < 1             | scalable                                | `UniquePositiveFixedPoint` |
//! | < 1             | concave activations and `T^m(0) >> 0`   | `UniquePositiveFixedPoint` |
//! | < 1             | otherwise                               | `NonemptyFixedPointSet`    |
//! | > 1             | `T^m(0) >> 0` or scalable               | `EmptyFixedPointSet`       |
//! | > 1             | otherwise                               | `EmptyInInterior`          |
//!
//! A numerically estimated asymptotic map (layers mixing saturating and
//! ReLU-like neurons) only yields a verdict when its radius is below
//! `1 - 1e-3`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotic::{asymptotic_map, AsymptoticMap};
use crate::classify::{classify, PropertyClass, Rule};
use crate::error::{Error, Result};
use crate::fixed_point::{iterate_fixed_point, primitivity_certificate_with, FixedPointRun};
use crate::linalg::{matrix_primitivity_with, sup_norm_diff, Norm};
use crate::network::Network;
use crate::{rng, EPS_POS};

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_240_607;

/// Half-width of the band around 1 in which no verdict is issued.
pub const BOUNDARY_BAND: f64 = 1e-9;

/// Margin below 1 required of a numerically estimated spectral radius.
pub const NUMERIC_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// Largest `m` tried for `T^m(0) >> 0`.
    pub m_max: usize,
    /// Picard stopping tolerance on successive iterates.
    pub tol: f64,
    pub max_iter: usize,
    /// Random starts besides zero used to cross-check a located fixed point.
    pub starts: usize,
    pub seed: u64,
    /// Random starts are uniform in `[0, start_box]^k`.
    pub start_box: f64,
    pub norm: Norm,
    pub eps_pos: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            m_max: 100,
            tol: 1e-9,
            max_iter: 100_000,
            starts: 10,
            seed: DEFAULT_SEED,
            start_box: 10.0,
            norm: Norm::Spectral,
            eps_pos: EPS_POS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    UniquePositiveFixedPoint,
    NonemptyFixedPointSet,
    EmptyInInterior,
    EmptyFixedPointSet,
    Inconclusive,
}

impl Verdict {
    pub fn is_decisive(self) -> bool {
        self != Verdict::Inconclusive
    }

    /// Fixed points are known to exist.
    pub fn has_fixed_points(self) -> bool {
        matches!(self, Verdict::UniquePositiveFixedPoint | Verdict::NonemptyFixedPointSet)
    }

    pub fn name(self) -> &'static str {
        match self {
            Verdict::UniquePositiveFixedPoint => "UniquePositiveFixedPoint",
            Verdict::NonemptyFixedPointSet => "NonemptyFixedPointSet",
            Verdict::EmptyInInterior => "EmptyInInterior",
            Verdict::EmptyFixedPointSet => "EmptyFixedPointSet",
            Verdict::Inconclusive => "Inconclusive",
        }
    }
}

/// The fixed point reached from zero, cross-checked against random starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocatedFixedPoint {
    #[serde(with = "crate::report::lenient::vec")]
    pub x: Vec<f64>,
    #[serde(with = "crate::report::lenient")]
    pub residual_sup_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Number of random starts besides zero.
    pub starts: usize,
    pub all_converged: bool,
    /// Largest sup-norm distance between the limits of any two starts,
    /// zero included.
    #[serde(with = "crate::report::lenient")]
    pub worst_pairwise_distance: f64,
    /// The point is the least fixed point (strong primitivity with spectral
    /// radius below one).
    pub least_element: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub property_class: PropertyClass,
    pub asymptotic: AsymptoticMap,
    pub spectral_radius: f64,
    pub norm: Norm,
    /// `prod_i ||W_i||`.
    pub norm_bound_product: f64,
    /// `||W_n ... W_1||`.
    pub norm_bound_composite: f64,
    /// Smallest `m` with `T^m(0) >> 0`.
    pub primitivity_exponent: Option<usize>,
    pub all_concave: bool,
    pub verdict: Verdict,
    /// Rules the verdict rests on.
    pub basis: Vec<Rule>,
    pub fixed_point: Option<LocatedFixedPoint>,
    pub budget: Budget,
}

/// `(prod_i ||W_i||, ||W_n ... W_1||)` in the chosen operator norm.
pub fn norm_bounds(net: &Network, norm: Norm) -> Result<(f64, f64)> {
    net.require_self_map()?;
    let product = net.layers().iter().map(|l| norm.of(l.weights())).product();
    Ok((product, norm.of(&net.weight_product())))
}

/// Whether the Jacobian at the positive point `u` is a primitive matrix.
pub fn jacobian_primitivity_at(net: &Network, u: &[f64]) -> Result<bool> {
    net.require_self_map()?;
    matrix_primitivity_with(&net.jacobian(u)?, EPS_POS)
}

struct Decision {
    verdict: Verdict,
    basis: Vec<Rule>,
}

fn decide(class: &PropertyClass, asymptotic: &AsymptoticMap, rho: f64, m: Option<usize>, concave: bool) -> Decision {
    let inconclusive = Decision {
        verdict: Verdict::Inconclusive,
        basis: vec![],
    };
    let level = class.level;
    if !level.is_weakly_scalable() || (rho - 1.0).abs() <= BOUNDARY_BAND {
        return inconclusive;
    }
    if matches!(asymptotic, AsymptoticMap::NumericOnly(_)) && !(rho < 1.0 - NUMERIC_MARGIN) {
        return inconclusive;
    }
    let (verdict, basis) = if rho < 1.0 {
        if level.is_scalable() {
            (Verdict::UniquePositiveFixedPoint, vec![Rule::UniqueScalable])
        } else if concave && m.is_some() {
            (Verdict::UniquePositiveFixedPoint, vec![Rule::UniqueConcavePrimitive])
        } else if m.is_some() {
            (
                Verdict::NonemptyFixedPointSet,
                vec![Rule::ExistenceBelowOne, Rule::InteriorFixedPoints],
            )
        } else {
            (Verdict::NonemptyFixedPointSet, vec![Rule::ExistenceBelowOne])
        }
    } else if m.is_some() {
        (Verdict::EmptyFixedPointSet, vec![Rule::EmptyStronglyPrimitive])
    } else if level.is_scalable() {
        (Verdict::EmptyFixedPointSet, vec![Rule::UniqueScalable])
    } else {
        (Verdict::EmptyInInterior, vec![Rule::NoInteriorFixedPoint])
    };
    Decision { verdict, basis }
}

/// Random starts in `[0, start_box]^k`, one independent stream per start.
pub fn random_starts(k: usize, budget: &Budget) -> Vec<Vec<f64>> {
    use rand::Rng;
    (0..budget.starts)
        .map(|i| {
            let mut r = rng::stream(budget.seed, i as u64);
            (0..k).map(|_| r.gen_range(0.0..=budget.start_box)).collect()
        })
        .collect()
}

fn locate(net: &Network, budget: &Budget, least_element: bool) -> Result<LocatedFixedPoint> {
    let k = net.input_dim();
    let mut starts = vec![vec![0.0; k]];
    starts.extend(random_starts(k, budget));
    let runs: Vec<FixedPointRun> = starts
        .par_iter()
        .map(|x0| iterate_fixed_point(net, x0, budget.tol, budget.max_iter))
        .collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for (i, a) in runs.iter().enumerate() {
        for b in &runs[i + 1..] {
            worst = worst.max(sup_norm_diff(&a.x, &b.x));
        }
    }
    let zero = &runs[0];
    Ok(LocatedFixedPoint {
        x: zero.x.clone(),
        residual_sup_norm: zero.residual,
        iterations: zero.iterations,
        converged: zero.converged,
        starts: budget.starts,
        all_converged: runs.iter().all(|r| r.converged),
        worst_pairwise_distance: worst,
        least_element,
    })
}

pub fn certify(net: &Network, budget: &Budget) -> Result<Certificate> {
    net.require_self_map()?;
    if !net.is_nonnegative() {
        return Err(Error::InvalidConfig(
            "certification requires nonnegative weights and biases (nonnegativity invariant)".into(),
        ));
    }
    if !(budget.tol > 0.0 && budget.start_box >= 0.0 && budget.eps_pos >= 0.0) {
        return Err(Error::InvalidConfig(format!("invalid budget {budget:?}")));
    }
    let property_class = classify(net);
    let asymptotic = asymptotic_map(net)?;
    let spectral_radius = asymptotic.spectral_radius()?;
    let (norm_bound_product, norm_bound_composite) = norm_bounds(net, budget.norm)?;
    let primitivity_exponent = primitivity_certificate_with(net, budget.m_max, budget.eps_pos)?;
    let all_concave = net
        .layers()
        .iter()
        .all(|l| l.activations().iter().all(|a| a.concave_on_nonneg()));

    let Decision { verdict, basis } = decide(
        &property_class,
        &asymptotic,
        spectral_radius,
        primitivity_exponent,
        all_concave,
    );
    let fixed_point = if verdict.has_fixed_points() {
        let least = primitivity_exponent.is_some() && spectral_radius < 1.0;
        Some(locate(net, budget, least)?)
    } else {
        None
    };
    Ok(Certificate {
        property_class,
        asymptotic,
        spectral_radius,
        norm: budget.norm,
        norm_bound_product,
        norm_bound_composite,
        primitivity_exponent,
        all_concave,
        verdict,
        basis,
        fixed_point,
        budget: *budget,
    })
}
