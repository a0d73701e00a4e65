//! Fixed-point analysis of feed-forward networks with nonnegative weights and
//! biases.
//!
//! Networks with nonnegative parameters and increasing activations are
//! monotonic and weakly scalable maps on the nonnegative cone. That places
//! them in the reach of nonlinear Perron-Frobenius theory, and this crate turns
//! the resulting existence and uniqueness results into computable
//! certificates:
//!
//! - [`classify`]: which of monotonic / weakly scalable / scalable is provable
//!   from the layer structure, with a rule trace.
//! - [`asymptotic`]: the asymptotic map `x -> lim T(p x) / p`, which is either
//!   zero or the product of the weight matrices.
//! - [`linalg`]: spectral radius, operator norms and matrix primitivity.
//! - [`fixed_point`]: Picard iteration and the `T^m(0) >> 0` primitivity test.
//! - [`interval`]: the fixed-point set along a ray through a known fixed point.
//! - [`certify`]: everything above combined into a [`certify::Certificate`].
//! - [`cone`] and [`oracle`]: property-carrying cone maps, their combinators,
//!   and sampling oracles that try to refute the declared properties.
//! - [`train`]: the nonnegative autoencoder experiment on synthetic angular
//!   spectra.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activation;
pub mod asymptotic;
pub mod builtin;
pub mod certify;
pub mod classify;
pub mod cone;
pub mod error;
pub mod fixed_point;
pub mod interval;
pub mod linalg;
pub mod model_io;
pub mod network;
pub mod oracle;
pub mod report;
pub mod rng;
pub mod train;

pub use activation::{ActivationKind, AsymptoteClass};
pub use asymptotic::{asymptotic_map, AsymptoticMap};
pub use certify::{certify, Budget, Certificate, Verdict};
pub use classify::{classify, PropertyClass, PropertyLevel, Rule};
pub use error::{Error, Result};
pub use fixed_point::{iterate_fixed_point, primitivity_certificate, FixedPointRun};
pub use interval::{interval_scan, IntervalEstimate, LowerEnd, ScanConfig, UpperEnd};
pub use linalg::{matrix_primitivity, spectral_radius, Norm};
pub use network::{ConeOperator, Layer, Network, ResNetStructure};

/// Absolute tolerance for equality tests.
pub const ATOL: f64 = 1e-9;

/// Margin for strict positivity: `x >> 0` means every entry exceeds this.
pub const EPS_POS: f64 = 1e-12;
