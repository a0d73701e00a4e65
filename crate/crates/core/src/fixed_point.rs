//! Picard iteration `x_{n+1} = T(x_n)` and the strong-primitivity test
//! `T^m(0) >> 0`.

use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::{is_strictly_positive, sup_norm_diff};
use crate::network::ConeOperator;
use crate::EPS_POS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointRun {
    /// Last iterate.
    #[serde(with = "crate::report::lenient::vec")]
    pub x: Vec<f64>,
    /// `||T(x) - x||_inf` at the last iterate.
    #[serde(with = "crate::report::lenient")]
    pub residual: f64,
    pub iterations: usize,
    /// Some step satisfied `||x_{n+1} - x_n||_inf < tol`.
    pub converged: bool,
}

fn require_self_map<T: ConeOperator + ?Sized>(op: &T) -> Result<()> {
    if op.input_dim() != op.output_dim() {
        return Err(Error::NotSelfMap {
            input: op.input_dim(),
            output: op.output_dim(),
        });
    }
    Ok(())
}

fn check_start<T: ConeOperator + ?Sized>(op: &T, x0: &[f64]) -> Result<()> {
    require_self_map(op)?;
    if x0.len() != op.input_dim() {
        return Err(dim_mismatch("start point", op.input_dim(), x0.len()));
    }
    if let Some((index, &value)) = x0.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::NegativeInput { index, value });
    }
    Ok(())
}

/// Iterates until successive iterates differ by less than `tol` in the sup
/// norm, `max_iter` steps have been taken, or an iterate stops being finite.
pub fn iterate_fixed_point<T: ConeOperator + ?Sized>(
    op: &T,
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<FixedPointRun> {
    iterate_fixed_point_observed(op, x0, tol, max_iter, |_, _| {})
}

/// Like [`iterate_fixed_point`], calling `observe(n, x_n)` on every new
/// iterate.
pub fn iterate_fixed_point_observed<T, F>(
    op: &T,
    x0: &[f64],
    tol: f64,
    max_iter: usize,
    mut observe: F,
) -> Result<FixedPointRun>
where
    T: ConeOperator + ?Sized,
    F: FnMut(usize, &[f64]),
{
    check_start(op, x0)?;
    let mut x = x0.to_vec();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let next = op.apply(&x);
        iterations += 1;
        let step = sup_norm_diff(&next, &x);
        x = next;
        observe(iterations, &x);
        if !x.iter().all(|v| v.is_finite()) {
            return Ok(FixedPointRun {
                x,
                residual: f64::INFINITY,
                iterations,
                converged: false,
            });
        }
        if step < tol {
            converged = true;
            break;
        }
    }
    let residual = sup_norm_diff(&op.apply(&x), &x);
    Ok(FixedPointRun {
        x,
        residual,
        iterations,
        converged,
    })
}

/// `T^m(0)`.
pub fn power_at_zero<T: ConeOperator + ?Sized>(op: &T, m: usize) -> Result<Vec<f64>> {
    require_self_map(op)?;
    let mut x = vec![0.0; op.input_dim()];
    for _ in 0..m {
        x = op.apply(&x);
    }
    Ok(x)
}

/// Smallest `m <= m_max` with `T^m(0) >> 0`; such an `m` certifies strong
/// primitivity.
pub fn primitivity_certificate<T: ConeOperator + ?Sized>(op: &T, m_max: usize) -> Result<Option<usize>> {
    primitivity_certificate_with(op, m_max, EPS_POS)
}

pub fn primitivity_certificate_with<T: ConeOperator + ?Sized>(
    op: &T,
    m_max: usize,
    eps_pos: f64,
) -> Result<Option<usize>> {
    require_self_map(op)?;
    let mut x = vec![0.0; op.input_dim()];
    for m in 1..=m_max {
        x = op.apply(&x);
        if is_strictly_positive(&x, eps_pos) {
            return Ok(Some(m));
        }
    }
    Ok(None)
}
