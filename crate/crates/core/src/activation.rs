//! Scalar activation catalog.
//!
//! Every entry is continuous and increasing on the real line. The catalog is
//! split by the limit of the derivative at `+inf`:
//!
//! - [`AsymptoteClass::Saturating`]: `sigma'(xi) -> 0`
//! - [`AsymptoteClass::Linear`]: `sigma'(xi) -> 1`
//!
//! The class decides the asymptotic map of a network; see
//! [`crate::asymptotic`].

use std::f64::consts::FRAC_2_PI;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Limit behavior of an activation's derivative at `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsymptoteClass {
    /// Derivative tends to zero.
    Saturating,
    /// Derivative tends to one.
    Linear,
}

impl AsymptoteClass {
    pub fn code(self) -> &'static str {
        match self {
            AsymptoteClass::Saturating => "saturating",
            AsymptoteClass::Linear => "linear",
        }
    }
}

/// A scalar activation from the closed catalog.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActivationKind {
    Sigmoid,
    /// `min(max(xi, 0), beta)` with `beta > 0`.
    CappedRelu {
        beta: f64,
    },
    /// `clamp(xi, -1, 1)`.
    SaturatedLinear,
    /// `xi / sqrt(1 + xi^2)`.
    InvSqrtUnit,
    /// `(2 / pi) * atan(xi)`.
    ArctanScaled,
    Tanh,
    Asinh,
    /// `xi / (1 + |xi|)`.
    Elliott,
    /// `sign(xi) * ln(1 + |xi|)`.
    Logarithmic,
    Relu,
    /// Identity for `xi >= 0`, `xi / sqrt(1 + xi^2)` otherwise.
    InvSqrtLinearUnit,
}

impl ActivationKind {
    /// All parameter-free catalog entries plus `CappedRelu { beta: 1.0 }`.
    pub const CATALOG: [ActivationKind; 11] = [
        ActivationKind::Sigmoid,
        ActivationKind::CappedRelu { beta: 1.0 },
        ActivationKind::SaturatedLinear,
        ActivationKind::InvSqrtUnit,
        ActivationKind::ArctanScaled,
        ActivationKind::Tanh,
        ActivationKind::Asinh,
        ActivationKind::Elliott,
        ActivationKind::Logarithmic,
        ActivationKind::Relu,
        ActivationKind::InvSqrtLinearUnit,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::CappedRelu { .. } => "capped_relu",
            ActivationKind::SaturatedLinear => "saturated_linear",
            ActivationKind::InvSqrtUnit => "inv_sqrt_unit",
            ActivationKind::ArctanScaled => "arctan_scaled",
            ActivationKind::Tanh => "tanh",
            ActivationKind::Asinh => "asinh",
            ActivationKind::Elliott => "elliott",
            ActivationKind::Logarithmic => "logarithmic",
            ActivationKind::Relu => "relu",
            ActivationKind::InvSqrtLinearUnit => "inv_sqrt_linear_unit",
        }
    }

    /// Checks the parameter constraints (`beta > 0` for capped ReLU).
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            ActivationKind::CappedRelu { beta } if !(beta.is_finite() && beta > 0.0) => {
                Err(format!("capped_relu requires a finite beta > 0, got {beta}"))
            }
            _ => Ok(()),
        }
    }

    pub fn asymptote_class(&self) -> AsymptoteClass {
        match self {
            ActivationKind::Relu | ActivationKind::InvSqrtLinearUnit => AsymptoteClass::Linear,
            _ => AsymptoteClass::Saturating,
        }
    }

    /// Strictly increasing on `[0, inf)`. Capped ReLU and saturated linear
    /// are flat past their caps.
    pub fn strictly_monotone_on_nonneg(&self) -> bool {
        !matches!(
            self,
            ActivationKind::CappedRelu { .. } | ActivationKind::SaturatedLinear
        )
    }

    /// Every catalog entry is concave on the nonnegative half-line.
    pub fn concave_on_nonneg(&self) -> bool {
        true
    }

    /// Scalable as a standalone coordinate map; only the sigmoid has
    /// `sigma(0) > 0` among the catalog entries.
    pub fn scalable_alone(&self) -> bool {
        matches!(self, ActivationKind::Sigmoid)
    }

    pub fn eval(&self, xi: f64) -> f64 {
        match *self {
            ActivationKind::Sigmoid => sigmoid(xi),
            ActivationKind::CappedRelu { beta } => xi.max(0.0).min(beta),
            ActivationKind::SaturatedLinear => xi.clamp(-1.0, 1.0),
            ActivationKind::InvSqrtUnit => xi / (1.0 + xi * xi).sqrt(),
            ActivationKind::ArctanScaled => FRAC_2_PI * xi.atan(),
            ActivationKind::Tanh => xi.tanh(),
            ActivationKind::Asinh => xi.asinh(),
            ActivationKind::Elliott => xi / (1.0 + xi.abs()),
            ActivationKind::Logarithmic => xi.signum() * xi.abs().ln_1p(),
            ActivationKind::Relu => {
                if xi > 0.0 {
                    xi
                } else {
                    0.0
                }
            }
            ActivationKind::InvSqrtLinearUnit => {
                if xi >= 0.0 {
                    xi
                } else {
                    xi / (1.0 + xi * xi).sqrt()
                }
            }
        }
    }

    /// Derivative; right-hand derivative at kinks.
    pub fn derivative(&self, xi: f64) -> f64 {
        match *self {
            ActivationKind::Sigmoid => {
                let s = sigmoid(xi);
                s * (1.0 - s)
            }
            ActivationKind::CappedRelu { beta } => {
                if (0.0..beta).contains(&xi) {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::SaturatedLinear => {
                if (-1.0..1.0).contains(&xi) {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::InvSqrtUnit => (1.0 + xi * xi).powf(-1.5),
            ActivationKind::ArctanScaled => FRAC_2_PI / (1.0 + xi * xi),
            ActivationKind::Tanh => {
                let t = xi.tanh();
                1.0 - t * t
            }
            ActivationKind::Asinh => 1.0 / (1.0 + xi * xi).sqrt(),
            ActivationKind::Elliott => {
                let d = 1.0 + xi.abs();
                1.0 / (d * d)
            }
            ActivationKind::Logarithmic => 1.0 / (1.0 + xi.abs()),
            ActivationKind::Relu => {
                if xi >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::InvSqrtLinearUnit => {
                if xi >= 0.0 {
                    1.0
                } else {
                    (1.0 + xi * xi).powf(-1.5)
                }
            }
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActivationKind::CappedRelu { beta } => write!(f, "capped_relu(beta={beta})"),
            other => f.write_str(other.name()),
        }
    }
}

fn sigmoid(xi: f64) -> f64 {
    if xi >= 0.0 {
        1.0 / (1.0 + (-xi).exp())
    } else {
        let e = xi.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Lambert's continued fraction for tanh, evaluated bottom-up.
    fn tanh_continued_fraction(x: f64) -> f64 {
        let x2 = x * x;
        let mut tail = 0.0;
        for k in (0..60).rev() {
            let odd = (2 * k + 1) as f64;
            tail = x2 / (odd + tail);
        }
        // tail == x^2 / (1 + x^2 / (3 + ...)) so tanh(x) = tail / x
        tail / x
    }

    #[test]
    fn catalog_values() {
        assert_eq!(ActivationKind::Sigmoid.eval(0.0), 0.5);
        assert_eq!(ActivationKind::Relu.eval(-3.2), 0.0);
        assert_eq!(ActivationKind::CappedRelu { beta: 2.0 }.eval(5.0), 2.0);
        let oracle = tanh_continued_fraction(1.0);
        assert!((ActivationKind::Tanh.eval(1.0) - oracle).abs() < 1e-12);
        assert!((oracle - 0.761_594_155_955_764_9).abs() < 1e-15);
    }

    #[test]
    fn derivative_values() {
        assert_eq!(ActivationKind::Relu.derivative(7.0), 1.0);
        assert_eq!(ActivationKind::Sigmoid.derivative(0.0), 0.25);
        let h = 1e-6;
        let e = ActivationKind::Elliott;
        let fd = (e.eval(2.0 + h) - e.eval(2.0 - h)) / (2.0 * h);
        assert!((e.derivative(2.0) - fd).abs() < 1e-6);
    }

    #[test]
    fn kinks_use_right_hand_derivative() {
        assert_eq!(ActivationKind::Relu.derivative(0.0), 1.0);
        let capped = ActivationKind::CappedRelu { beta: 2.0 };
        assert_eq!(capped.derivative(0.0), 1.0);
        assert_eq!(capped.derivative(2.0), 0.0);
        assert_eq!(ActivationKind::SaturatedLinear.derivative(-1.0), 1.0);
        assert_eq!(ActivationKind::SaturatedLinear.derivative(1.0), 0.0);
        assert_eq!(ActivationKind::InvSqrtLinearUnit.derivative(0.0), 1.0);
    }

    #[test]
    fn metadata_flags() {
        let l2: Vec<_> = ActivationKind::CATALOG
            .iter()
            .filter(|a| a.asymptote_class() == AsymptoteClass::Linear)
            .map(|a| a.name())
            .collect();
        assert_eq!(l2, ["relu", "inv_sqrt_linear_unit"]);

        let non_strict: Vec<_> = ActivationKind::CATALOG
            .iter()
            .filter(|a| !a.strictly_monotone_on_nonneg())
            .map(|a| a.name())
            .collect();
        assert_eq!(non_strict, ["capped_relu", "saturated_linear"]);

        let scalable: Vec<_> = ActivationKind::CATALOG
            .iter()
            .filter(|a| a.scalable_alone())
            .map(|a| a.name())
            .collect();
        assert_eq!(scalable, ["sigmoid"]);
        assert!(ActivationKind::CATALOG.iter().all(|a| a.concave_on_nonneg()));
    }

    #[test]
    fn capped_relu_needs_positive_beta() {
        assert!(ActivationKind::CappedRelu { beta: 0.0 }.validate().is_err());
        assert!(ActivationKind::CappedRelu { beta: -1.0 }.validate().is_err());
        assert!(ActivationKind::CappedRelu { beta: 0.5 }.validate().is_ok());
    }

    #[test]
    fn derivative_limits_follow_class() {
        for a in ActivationKind::CATALOG {
            let d = a.derivative(1e9);
            match a.asymptote_class() {
                AsymptoteClass::Linear => assert_eq!(d, 1.0, "{a}"),
                AsymptoteClass::Saturating => assert!(d < 1e-8, "{a}: {d}"),
            }
        }
    }

    proptest! {
        #[test]
        fn eval_is_nondecreasing(a in -50.0f64..50.0, b in -50.0f64..50.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            for k in ActivationKind::CATALOG {
                prop_assert!(k.eval(lo) <= k.eval(hi), "{} at {} {}", k, lo, hi);
                prop_assert!(k.derivative(lo) >= 0.0);
            }
        }

        #[test]
        fn smooth_derivatives_match_finite_differences(x in -5.0f64..5.0) {
            let h = 1e-6;
            for k in ActivationKind::CATALOG {
                // keep away from kinks
                if !matches!(k, ActivationKind::Sigmoid | ActivationKind::Tanh | ActivationKind::Asinh
                    | ActivationKind::ArctanScaled | ActivationKind::InvSqrtUnit) {
                    continue;
                }
                let fd = (k.eval(x + h) - k.eval(x - h)) / (2.0 * h);
                prop_assert!((k.derivative(x) - fd).abs() < 1e-6);
            }
        }
    }
}
