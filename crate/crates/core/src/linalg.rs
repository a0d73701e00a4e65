//! Matrix routines for nonnegative matrices: spectral radius, operator norms
//! and primitivity.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graphmap::DiGraphMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::EPS_POS;

pub const POWER_REL_TOL: f64 = 1e-12;
pub const POWER_MAX_ITER: usize = 100_000;

/// Operator norm choice for norm bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    /// Largest singular value.
    Spectral,
    /// Maximum absolute column sum.
    One,
    /// Maximum absolute row sum.
    Inf,
}

impl Norm {
    pub const ALL: [Norm; 3] = [Norm::Spectral, Norm::One, Norm::Inf];

    pub fn of(self, m: &DMatrix<f64>) -> f64 {
        if m.is_empty() {
            return 0.0;
        }
        match self {
            Norm::Spectral => m.clone().singular_values().max(),
            Norm::One => m
                .column_iter()
                .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max),
            Norm::Inf => m
                .row_iter()
                .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::Spectral => "spectral",
            Norm::One => "one",
            Norm::Inf => "inf",
        })
    }
}

impl FromStr for Norm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "spectral" | "2" => Ok(Norm::Spectral),
            "one" | "1" => Ok(Norm::One),
            "inf" | "infinity" => Ok(Norm::Inf),
            other => Err(format!("unknown norm {other:?} (expected spectral, one or inf)")),
        }
    }
}

fn check_square_nonneg(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let value = m[(r, c)];
            if !(value >= 0.0) {
                return Err(Error::NegativeEntry { row: r, col: c, value });
            }
        }
    }
    Ok(())
}

/// Spectral radius of a nonnegative square matrix.
///
/// The support graph is split into strongly connected components; the radius
/// is the largest radius of an irreducible diagonal block, and a block that
/// is a single vertex without a loop contributes exactly zero (so nilpotent
/// matrices give 0). Each irreducible block is handled by power iteration on
/// `B + c I`, where `c` is the current upper bound, until the Collatz-Wielandt
/// bracket `min_i (Bx)_i / x_i <= rho <= max_i (Bx)_i / x_i` is narrower than
/// [`POWER_REL_TOL`] relative. If the bracket has not closed after
/// [`POWER_MAX_ITER`] steps, the block radius is read off a real Schur
/// decomposition and clamped into the bracket.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    check_square_nonneg(m)?;
    Ok(strong_components(m)
        .iter()
        .map(|comp| block_radius(m, comp))
        .fold(0.0, f64::max))
}

/// Strongly connected components of the graph with an edge `r -> c` for every
/// positive entry.
fn strong_components(m: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut g = DiGraphMap::<usize, ()>::with_capacity(n, n * n);
    for v in 0..n {
        g.add_node(v);
    }
    for (r, c) in (0..n).flat_map(|r| (0..n).map(move |c| (r, c))) {
        if m[(r, c)] > 0.0 {
            g.add_edge(r, c, ());
        }
    }
    tarjan_scc(&g)
}

fn block_radius(m: &DMatrix<f64>, idx: &[usize]) -> f64 {
    if idx.len() == 1 {
        return m[(idx[0], idx[0])];
    }
    let k = idx.len();
    let b = DMatrix::from_fn(k, k, |r, c| m[(idx[r], idx[c])]);
    // An irreducible block keeps every iterate strictly positive.
    let mut x = DVector::from_element(k, 1.0);
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    for _ in 0..POWER_MAX_ITER {
        let z = &b * &x;
        let (l, h) = z
            .iter()
            .zip(x.iter())
            .fold((f64::INFINITY, 0.0f64), |(l, h), (zi, xi)| {
                let r = zi / xi;
                (l.min(r), h.max(r))
            });
        lo = lo.max(l);
        hi = hi.min(h);
        if hi - lo <= POWER_REL_TOL * hi {
            return 0.5 * (lo + hi);
        }
        x = z + &x * h;
        let top = x.max();
        x /= top;
    }
    schur_spectral_radius(&b).clamp(lo, hi)
}

fn schur_spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Square bit matrix used for boolean powers.
#[derive(Clone, PartialEq)]
struct BitMatrix {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    fn from_threshold(m: &DMatrix<f64>, eps: f64) -> Self {
        let n = m.nrows();
        let words = n.div_ceil(64);
        let mut bits = vec![0u64; n * words];
        for r in 0..n {
            for c in 0..n {
                if m[(r, c)] > eps {
                    bits[r * words + c / 64] |= 1 << (c % 64);
                }
            }
        }
        Self { n, words, bits }
    }

    fn get(&self, r: usize, c: usize) -> bool {
        self.bits[r * self.words + c / 64] >> (c % 64) & 1 == 1
    }

    fn mul(&self, other: &BitMatrix) -> BitMatrix {
        let mut out = vec![0u64; self.bits.len()];
        for r in 0..self.n {
            let dst = &mut out[r * self.words..(r + 1) * self.words];
            for k in 0..self.n {
                if self.get(r, k) {
                    let src = &other.bits[k * self.words..(k + 1) * self.words];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d |= s;
                    }
                }
            }
        }
        BitMatrix {
            n: self.n,
            words: self.words,
            bits: out,
        }
    }

    fn all_set(&self) -> bool {
        (0..self.n).all(|r| (0..self.n).all(|c| self.get(r, c)))
    }
}

/// Whether some power of `m` is entrywise positive, treating entries above
/// [`EPS_POS`] as positive.
pub fn matrix_primitivity(m: &DMatrix<f64>) -> Result<bool> {
    matrix_primitivity_with(m, EPS_POS)
}

/// Boolean powers up to the Wielandt bound `(k - 1)^2 + 1`.
///
/// Once a power of a nonnegative matrix is positive every later power is too,
/// so it suffices to square repeatedly until the exponent reaches the bound.
pub fn matrix_primitivity_with(m: &DMatrix<f64>, eps_pos: f64) -> Result<bool> {
    check_square_nonneg(m)?;
    let k = m.nrows();
    if k == 0 {
        return Ok(false);
    }
    let bound = (k - 1) * (k - 1) + 1;
    let mut power = BitMatrix::from_threshold(m, eps_pos);
    let mut exponent = 1usize;
    loop {
        if power.all_set() {
            return Ok(true);
        }
        if exponent >= bound {
            return Ok(false);
        }
        power = power.mul(&power);
        exponent *= 2;
    }
}

/// Every entry exceeds `eps`.
pub fn is_strictly_positive(v: &[f64], eps: f64) -> bool {
    v.iter().all(|&x| x > eps)
}

pub fn sup_norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn sup_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Row-major serialized form of a matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&DMatrix<f64>> for MatrixDoc {
    fn from(m: &DMatrix<f64>) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: crate::model_io::row_major(m),
        }
    }
}

impl MatrixDoc {
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(crate::error::dim_mismatch(
                "matrix data",
                self.rows * self.cols,
                self.data.len(),
            ));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}
