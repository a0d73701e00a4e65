//! Fixed points along the ray through a known fixed point.
//!
//! For a monotonic, weakly scalable map with a positive fixed point `u`, the
//! fixed points on the ray `{lambda u}` form an interval `[s0, t0]` that
//! contains 1. The scan samples `lambda` on a geometric grid and bisects the two
//! transitions between fixed and non-fixed multiples.

use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::sup_norm_diff;
use crate::network::ConeOperator;
use crate::EPS_POS;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    /// The grid spans `[1 / lambda_max, lambda_max]`.
    pub lambda_max: f64,
    /// Number of grid points (the anchor `lambda = 1` is always added).
    pub grid: usize,
    /// `lambda u` counts as fixed when `||T(lambda u) - lambda u||_inf < tol`.
    pub tol: f64,
    /// Relative width at which boundary bisection stops.
    pub rel_precision: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            lambda_max: 1e6,
            grid: 200,
            tol: 1e-9,
            rel_precision: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LowerEnd {
    Value {
        value: f64,
    },
    /// Every grid multiple below the anchor is fixed.
    ZeroLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UpperEnd {
    Value {
        value: f64,
    },
    /// Every grid multiple above the anchor is fixed.
    Unbounded,
}

impl LowerEnd {
    pub fn value(self) -> Option<f64> {
        match self {
            LowerEnd::Value { value } => Some(value),
            LowerEnd::ZeroLimit => None,
        }
    }
}

impl UpperEnd {
    pub fn value(self) -> Option<f64> {
        match self {
            UpperEnd::Value { value } => Some(value),
            UpperEnd::Unbounded => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSample {
    pub lambda: f64,
    pub fixed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    pub anchor_u: Vec<f64>,
    pub anchor_residual: f64,
    pub s0: LowerEnd,
    pub t0: UpperEnd,
    pub samples: Vec<ScanSample>,
}

impl IntervalEstimate {
    /// Every grid point was fixed.
    pub fn whole_ray_fixed(&self) -> bool {
        self.samples.iter().all(|s| s.fixed)
    }
}

fn residual_at<T: ConeOperator + ?Sized>(op: &T, u: &[f64], lambda: f64) -> f64 {
    let x: Vec<f64> = u.iter().map(|v| lambda * v).collect();
    sup_norm_diff(&op.apply(&x), &x)
}

/// Bisects in log space between a fixed and a non-fixed multiple and returns
/// the geometric midpoint of the final bracket.
fn bisect<F: Fn(f64) -> bool>(is_fixed: F, mut fixed: f64, mut free: f64, rel: f64) -> f64 {
    while (fixed - free).abs() > rel * fixed.max(free) {
        let mid = (fixed * free).sqrt();
        if is_fixed(mid) {
            fixed = mid;
        } else {
            free = mid;
        }
    }
    (fixed * free).sqrt()
}

pub fn interval_scan<T: ConeOperator + ?Sized>(op: &T, u: &[f64], cfg: &ScanConfig) -> Result<IntervalEstimate> {
    if op.input_dim() != op.output_dim() {
        return Err(Error::NotSelfMap {
            input: op.input_dim(),
            output: op.output_dim(),
        });
    }
    if u.len() != op.input_dim() {
        return Err(dim_mismatch("anchor", op.input_dim(), u.len()));
    }
    if let Some((index, &value)) = u.iter().enumerate().find(|(_, v)| !(**v > EPS_POS)) {
        return Err(Error::NonPositiveInput { index, value });
    }
    if !(cfg.lambda_max > 1.0 && cfg.grid >= 2 && cfg.tol > 0.0 && cfg.rel_precision > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "scan needs lambda_max > 1, grid >= 2, tol > 0 and rel_precision > 0; got {cfg:?}"
        )));
    }
    let anchor_residual = residual_at(op, u, 1.0);
    if !(anchor_residual < cfg.tol) {
        return Err(Error::AnchorNotFixed {
            residual: anchor_residual,
            tol: cfg.tol,
        });
    }

    let is_fixed = |lambda: f64| residual_at(op, u, lambda) < cfg.tol;
    let log_max = cfg.lambda_max.ln();
    let mut lambdas: Vec<f64> = (0..cfg.grid)
        .map(|i| (-log_max + 2.0 * log_max * i as f64 / (cfg.grid - 1) as f64).exp())
        .collect();
    lambdas.push(1.0);
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    let samples: Vec<ScanSample> = lambdas
        .iter()
        .map(|&lambda| ScanSample {
            lambda,
            fixed: lambda == 1.0 || is_fixed(lambda),
        })
        .collect();

    let one = lambdas.iter().position(|&l| l == 1.0).expect("anchor is on the grid");
    let mut lo = one;
    while lo > 0 && samples[lo - 1].fixed {
        lo -= 1;
    }
    let mut hi = one;
    while hi + 1 < samples.len() && samples[hi + 1].fixed {
        hi += 1;
    }

    let s0 = if lo == 0 {
        LowerEnd::ZeroLimit
    } else {
        LowerEnd::Value {
            value: bisect(is_fixed, lambdas[lo], lambdas[lo - 1], cfg.rel_precision).min(1.0),
        }
    };
    let t0 = if hi + 1 == samples.len() {
        UpperEnd::Unbounded
    } else {
        UpperEnd::Value {
            value: bisect(is_fixed, lambdas[hi], lambdas[hi + 1], cfg.rel_precision).max(1.0),
        }
    };
    Ok(IntervalEstimate {
        anchor_u: u.to_vec(),
        anchor_residual,
        s0,
        t0,
        samples,
    })
}
