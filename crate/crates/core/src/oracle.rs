//! Sampling oracles for order properties of cone maps.
//!
//! Each oracle draws random points from `[0, box]^s` and looks for a
//! violation of the defining inequality. The answer is one-sided: a
//! [`OracleVerdict::Counterexample`] refutes the property, while
//! [`OracleVerdict::Pass`] only means no violation was found in the sample.
//!
//! Trials are independent: trial `t` draws from its own stream of the seed,
//! so the verdict (including which counterexample is reported, always the
//! lowest failing trial) does not depend on how trials are scheduled.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cone::{ConeMap, Property};
use crate::network::ConeOperator;
use crate::{rng, EPS_POS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub trials: usize,
    /// Samples are drawn from `[0, box_size]^s`.
    pub box_size: f64,
    pub seed: u64,
    /// Required margin for strict inequalities.
    pub eps_pos: f64,
    /// Relative slack `slack * max(1, |v|)` allowed on non-strict inequalities.
    pub slack: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            trials: 1000,
            box_size: 10.0,
            seed: crate::certify::DEFAULT_SEED,
            eps_pos: EPS_POS,
            slack: 1e-12,
        }
    }
}

impl OracleConfig {
    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn tolerance(&self, v: f64) -> f64 {
        self.slack * v.abs().max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub trial: usize,
    #[serde(with = "crate::report::lenient::vec")]
    pub x: Vec<f64>,
    /// The larger point for monotonicity oracles, `rho x` for scalability.
    #[serde(with = "crate::report::lenient::vec")]
    pub other: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// Output coordinate where the inequality failed.
    pub coordinate: usize,
    /// Size of the violation; for strict inequalities, how far the margin
    /// fell short.
    #[serde(with = "crate::report::lenient")]
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum OracleVerdict {
    Pass { trials: usize },
    Counterexample(Counterexample),
}

impl OracleVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, OracleVerdict::Pass { .. })
    }
}

fn run<F>(cfg: &OracleConfig, trial: F) -> OracleVerdict
where
    F: Fn(usize, &mut ChaCha8Rng) -> Option<Counterexample> + Sync,
{
    let found = (0..cfg.trials).into_par_iter().find_map_first(|t| {
        let mut r = rng::stream(cfg.seed, t as u64);
        trial(t, &mut r)
    });
    match found {
        Some(c) => OracleVerdict::Counterexample(c),
        None => OracleVerdict::Pass { trials: cfg.trials },
    }
}

fn uniform_point(r: &mut ChaCha8Rng, s: usize, b: f64) -> Vec<f64> {
    (0..s).map(|_| r.gen_range(0.0..=b)).collect()
}

/// A pair `x <= x_tilde` in the box that differs exactly on `subset`: on
/// those coordinates two uniform draws are sorted, elsewhere they coincide.
fn ordered_pair(r: &mut ChaCha8Rng, subset: &[bool], b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut x = Vec::with_capacity(subset.len());
    let mut y = Vec::with_capacity(subset.len());
    for &moved in subset {
        let a = r.gen_range(0.0..=b);
        if moved {
            let c = r.gen_range(0.0..=b);
            x.push(a.min(c));
            y.push(a.max(c));
        } else {
            x.push(a);
            y.push(a);
        }
    }
    (x, y)
}

fn random_subset(r: &mut ChaCha8Rng, s: usize, nonempty: bool) -> Vec<bool> {
    let mut subset: Vec<bool> = (0..s).map(|_| r.gen_bool(0.5)).collect();
    if nonempty && s > 0 && !subset.iter().any(|&m| m) {
        subset[r.gen_range(0..s)] = true;
    }
    subset
}

/// `rho` log-uniform in `(1, 10]`.
fn random_rho(r: &mut ChaCha8Rng) -> f64 {
    10f64.powf(1.0 - r.gen::<f64>())
}

/// First coordinate where `f(y) - f(x)` falls below `-tolerance`.
fn first_decrease(cfg: &OracleConfig, fx: &[f64], fy: &[f64]) -> Option<(usize, f64)> {
    fx.iter()
        .zip(fy)
        .enumerate()
        .find(|(_, (a, b))| !(**b - **a >= -cfg.tolerance(**b)))
        .map(|(i, (a, b))| (i, a - b))
}

/// First coordinate where `f(y) - f(x)` is not above `eps_pos`.
fn first_non_increase(cfg: &OracleConfig, fx: &[f64], fy: &[f64]) -> Option<(usize, f64)> {
    fx.iter()
        .zip(fy)
        .enumerate()
        .find(|(_, (a, b))| !(**b - **a > cfg.eps_pos))
        .map(|(i, (a, b))| (i, cfg.eps_pos - (b - a)))
}

fn pair_counterexample(trial: usize, x: Vec<f64>, y: Vec<f64>, (coordinate, gap): (usize, f64)) -> Counterexample {
    Counterexample {
        trial,
        x,
        other: y,
        rho: None,
        coordinate,
        gap,
    }
}

/// `x <= x_tilde  =>  f(x) <= f(x_tilde)`.
pub fn oracle_monotonic<F: ConeOperator + ?Sized>(f: &F, cfg: &OracleConfig) -> OracleVerdict {
    let s = f.input_dim();
    run(cfg, |t, r| {
        let subset = random_subset(r, s, false);
        let (x, y) = ordered_pair(r, &subset, cfg.box_size);
        let hit = first_decrease(cfg, &f.apply(&x), &f.apply(&y))?;
        Some(pair_counterexample(t, x, y, hit))
    })
}

/// `x < x_tilde  =>  f(x) < f(x_tilde)` and `x << x_tilde  =>  f(x) << f(x_tilde)`.
/// Each trial checks both clauses.
pub fn oracle_strictly_monotonic<F: ConeOperator + ?Sized>(f: &F, cfg: &OracleConfig) -> OracleVerdict {
    let s = f.input_dim();
    run(cfg, |t, r| {
        let subset = random_subset(r, s, true);
        let (x, y) = ordered_pair(r, &subset, cfg.box_size);
        let (fx, fy) = (f.apply(&x), f.apply(&y));
        if let Some(hit) = first_decrease(cfg, &fx, &fy) {
            return Some(pair_counterexample(t, x, y, hit));
        }
        let best = fx
            .iter()
            .zip(&fy)
            .map(|(a, b)| b - a)
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, d)| if d > acc.1 { (i, d) } else { acc },
            );
        if !(best.1 > cfg.eps_pos) {
            return Some(pair_counterexample(t, x, y, (best.0, cfg.eps_pos - best.1)));
        }

        let (x, y) = ordered_pair(r, &vec![true; s], cfg.box_size);
        let hit = first_non_increase(cfg, &f.apply(&x), &f.apply(&y))?;
        Some(pair_counterexample(t, x, y, hit))
    })
}

/// `x < x_tilde  =>  f(x) << f(x_tilde)`.
pub fn oracle_strong_monotonic<F: ConeOperator + ?Sized>(f: &F, cfg: &OracleConfig) -> OracleVerdict {
    let s = f.input_dim();
    run(cfg, |t, r| {
        let subset = random_subset(r, s, true);
        let (x, y) = ordered_pair(r, &subset, cfg.box_size);
        let hit = first_non_increase(cfg, &f.apply(&x), &f.apply(&y))?;
        Some(pair_counterexample(t, x, y, hit))
    })
}

/// Trial 0 uses `x = 0`; the others draw `x` uniformly from the box.
fn scaling_trial(r: &mut ChaCha8Rng, t: usize, s: usize, b: f64) -> (Vec<f64>, f64, Vec<f64>) {
    let x = if t == 0 { vec![0.0; s] } else { uniform_point(r, s, b) };
    let rho = random_rho(r);
    let rx = x.iter().map(|v| rho * v).collect();
    (x, rho, rx)
}

/// `f(rho x) <= rho f(x)` for `rho > 1`.
pub fn oracle_weakly_scalable<F: ConeOperator + ?Sized>(f: &F, cfg: &OracleConfig) -> OracleVerdict {
    let s = f.input_dim();
    run(cfg, |t, r| {
        let (x, rho, rx) = scaling_trial(r, t, s, cfg.box_size);
        let (fx, frx) = (f.apply(&x), f.apply(&rx));
        let (coordinate, gap) = fx
            .iter()
            .zip(&frx)
            .enumerate()
            .map(|(i, (a, b))| (i, b - rho * a))
            .find(|(i, excess)| !(*excess <= cfg.tolerance(rho * fx[*i])))?;
        Some(Counterexample {
            trial: t,
            x,
            other: rx,
            rho: Some(rho),
            coordinate,
            gap,
        })
    })
}

/// `f(rho x) << rho f(x)` for `rho > 1`, with every coordinate below by more
/// than `eps_pos`.
pub fn oracle_scalable<F: ConeOperator + ?Sized>(f: &F, cfg: &OracleConfig) -> OracleVerdict {
    let s = f.input_dim();
    run(cfg, |t, r| {
        let (x, rho, rx) = scaling_trial(r, t, s, cfg.box_size);
        let (fx, frx) = (f.apply(&x), f.apply(&rx));
        let (coordinate, margin) = fx
            .iter()
            .zip(&frx)
            .enumerate()
            .map(|(i, (a, b))| (i, rho * a - b))
            .find(|(_, margin)| !(*margin > cfg.eps_pos))?;
        Some(Counterexample {
            trial: t,
            x,
            other: rx,
            rho: Some(rho),
            coordinate,
            gap: cfg.eps_pos - margin,
        })
    })
}

/// `f` maps the box into the nonnegative cone with finite values.
pub fn oracle_into_cone<F: ConeOperator + ?Sized>(f: &F, cfg: &OracleConfig) -> OracleVerdict {
    let s = f.input_dim();
    run(cfg, |t, r| {
        let x = if t == 0 {
            vec![0.0; s]
        } else {
            uniform_point(r, s, cfg.box_size)
        };
        let fx = f.apply(&x);
        let (coordinate, &v) = fx.iter().enumerate().find(|(_, v)| !(**v >= 0.0 && v.is_finite()))?;
        Some(Counterexample {
            trial: t,
            other: fx.clone(),
            x,
            rho: None,
            coordinate,
            gap: -v,
        })
    })
}

pub fn oracle<F: ConeOperator + ?Sized>(property: Property, f: &F, cfg: &OracleConfig) -> OracleVerdict {
    match property {
        Property::Monotonic => oracle_monotonic(f, cfg),
        Property::WeaklyScalable => oracle_weakly_scalable(f, cfg),
        Property::Scalable => oracle_scalable(f, cfg),
        Property::StrictlyMonotonic => oracle_strictly_monotonic(f, cfg),
        Property::StronglyMonotonic => oracle_strong_monotonic(f, cfg),
    }
}

/// Runs the oracle of every declared property of `map`.
pub fn check_declared(map: &ConeMap, cfg: &OracleConfig) -> Vec<(Property, OracleVerdict)> {
    map.declared().iter().map(|p| (p, oracle(p, map, cfg))).collect()
}
