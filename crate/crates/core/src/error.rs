use thiserror::Error;

/// Errors produced by network construction, analysis and training.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error("input coordinate {index} is {value}; inputs must lie in the nonnegative cone")]
    NegativeInput { index: usize, value: f64 },

    #[error("input coordinate {index} is {value}; a strictly positive point is required")]
    NonPositiveInput { index: usize, value: f64 },

    #[error("layer {layer} {what} = {value} violates the nonnegativity invariant")]
    NegativeParameter { layer: usize, what: String, value: f64 },

    #[error("layer {layer} {what} is not finite ({value})")]
    NonFiniteParameter { layer: usize, what: String, value: f64 },

    #[error("invalid activation in layer {layer}, neuron {neuron}: {reason}")]
    InvalidActivation {
        layer: usize,
        neuron: usize,
        reason: String,
    },

    #[error("network has no layers")]
    EmptyNetwork,

    #[error("network maps R^{input} to R^{output}; a self-map is required")]
    NotSelfMap { input: usize, output: usize },

    #[error("matrix is {rows}x{cols}; a square matrix is required")]
    NonSquare { rows: usize, cols: usize },

    #[error("matrix entry ({row}, {col}) = {value} is negative")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("anchor is not a fixed point: residual {residual} exceeds tolerance {tol}")]
    AnchorNotFixed { residual: f64, tol: f64 },

    #[error("invalid mixture: {0}")]
    InvalidMixture(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("training loss became non-finite at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("malformed document: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn dim_mismatch(context: &str, expected: usize, got: usize) -> Error {
    Error::DimensionMismatch {
        context: context.to_string(),
        expected,
        got,
    }
}
