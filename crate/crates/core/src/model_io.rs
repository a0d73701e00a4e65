//! Versioned JSON model documents.
//!
//! Schema `pfnet-model` version 1:
//!
//! ```json
//! {
//!   "format": "pfnet-model",
//!   "version": 1,
//!   "layers": [
//!     {
//!       "inputs": 2,
//!       "outputs": 2,
//!       "weights": [1.0, 0.0, 0.0, 1.0],
//!       "bias": [0.0, 0.0],
//!       "activations": [{ "kind": "relu" }, { "kind": "capped_relu", "beta": 2.0 }]
//!     }
//!   ]
//! }
//! ```
//!
//! `weights` is row-major with `outputs` rows and `inputs` columns. Numbers are
//! written in shortest round-trip form (at most 17 significant digits), so
//! `load(save(net))` is bit-exact.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;
use crate::error::{dim_mismatch, Error, Result};
use crate::network::{Layer, Network};

pub const MODEL_FORMAT: &str = "pfnet-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDoc {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activations: Vec<ActivationKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDoc {
    pub format: String,
    pub version: u32,
    pub layers: Vec<LayerDoc>,
}

impl ModelDoc {
    pub fn from_network(net: &Network) -> Self {
        let layers = net
            .layers()
            .iter()
            .map(|l| LayerDoc {
                inputs: l.input_dim(),
                outputs: l.output_dim(),
                weights: row_major(l.weights()),
                bias: l.bias().iter().copied().collect(),
                activations: l.activations().to_vec(),
            })
            .collect();
        Self {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            layers,
        }
    }

    /// Builds the network, enforcing every structural invariant.
    pub fn to_network(&self) -> Result<Network> {
        Network::new(self.layers()?)
    }

    /// Builds the network without the nonnegativity check.
    pub fn to_network_unchecked(&self) -> Result<Network> {
        Network::new_unchecked(self.layers()?)
    }

    fn layers(&self) -> Result<Vec<Layer>> {
        if self.format != MODEL_FORMAT {
            return Err(Error::Format(format!(
                "expected format \"{MODEL_FORMAT}\", found \"{}\"",
                self.format
            )));
        }
        if self.version != MODEL_VERSION {
            return Err(Error::Format(format!(
                "unsupported model version {} (this build reads version {MODEL_VERSION})",
                self.version
            )));
        }
        self.layers
            .iter()
            .enumerate()
            .map(|(i, doc)| {
                if doc.weights.len() != doc.inputs * doc.outputs {
                    return Err(dim_mismatch(
                        &format!("layer {i} weights"),
                        doc.inputs * doc.outputs,
                        doc.weights.len(),
                    ));
                }
                let w = DMatrix::from_row_slice(doc.outputs, doc.inputs, &doc.weights);
                let b = DVector::from_column_slice(&doc.bias);
                Layer::new_unchecked(w, b, doc.activations.clone()).map_err(|e| match e {
                    Error::InvalidActivation { neuron, reason, .. } => Error::InvalidActivation {
                        layer: i,
                        neuron,
                        reason,
                    },
                    Error::DimensionMismatch { context, expected, got } => Error::DimensionMismatch {
                        context: format!("layer {i}: {context}"),
                        expected,
                        got,
                    },
                    other => other,
                })
            })
            .collect()
    }
}

pub(crate) fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

pub fn to_json(net: &Network) -> String {
    serde_json::to_string_pretty(&ModelDoc::from_network(net)).expect("model serializes")
}

pub fn from_json(text: &str) -> Result<Network> {
    let doc: ModelDoc = serde_json::from_str(text)?;
    doc.to_network()
}

pub fn save(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_json(net))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<Network> {
    from_json(&fs::read_to_string(path)?)
}

/// Loads a model skipping the nonnegativity check.
pub fn load_unchecked(path: impl AsRef<Path>) -> Result<Network> {
    let doc: ModelDoc = serde_json::from_str(&fs::read_to_string(path)?)?;
    doc.to_network_unchecked()
}
