//! The asymptotic map `T_inf(x) = lim_{p -> inf} T(p x) / p`.
//!
//! If some layer consists only of saturating activations the limit is zero.
//! If every activation in every layer is ReLU-like the limit is the linear map
//! `W_n ... W_1`. Layers that mix both kinds are not covered by either case;
//! for those the map is estimated column by column at a large finite `p` and
//! flagged [`AsymptoticMap::NumericOnly`].

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::activation::AsymptoteClass;
use crate::error::Result;
use crate::linalg::{spectral_radius, MatrixDoc};
use crate::network::Network;

/// Scale used for finite-`p` limit estimates.
pub const LIMIT_SCALE: f64 = 1e8;

#[derive(Debug, Clone, PartialEq)]
pub enum AsymptoticMap {
    Zero,
    Linear(DMatrix<f64>),
    /// Finite-`p` estimate for networks with mixed layers.
    NumericOnly(DMatrix<f64>),
}

impl AsymptoticMap {
    /// Spectral radius of the map; exactly zero for [`AsymptoticMap::Zero`].
    pub fn spectral_radius(&self) -> Result<f64> {
        match self {
            AsymptoticMap::Zero => Ok(0.0),
            AsymptoticMap::Linear(m) | AsymptoticMap::NumericOnly(m) => spectral_radius(m),
        }
    }

    pub fn matrix(&self) -> Option<&DMatrix<f64>> {
        match self {
            AsymptoticMap::Zero => None,
            AsymptoticMap::Linear(m) | AsymptoticMap::NumericOnly(m) => Some(m),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AsymptoticMap::Zero => "zero",
            AsymptoticMap::Linear(_) => "linear",
            AsymptoticMap::NumericOnly(_) => "numeric_only",
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum AsymptoticDoc {
    Zero,
    Linear { matrix: MatrixDoc },
    NumericOnly { matrix: MatrixDoc, scale: f64 },
}

impl Serialize for AsymptoticMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let doc = match self {
            AsymptoticMap::Zero => AsymptoticDoc::Zero,
            AsymptoticMap::Linear(m) => AsymptoticDoc::Linear { matrix: m.into() },
            AsymptoticMap::NumericOnly(m) => AsymptoticDoc::NumericOnly {
                matrix: m.into(),
                scale: LIMIT_SCALE,
            },
        };
        doc.serialize(s)
    }
}

impl<'de> Deserialize<'de> for AsymptoticMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        Ok(match AsymptoticDoc::deserialize(d)? {
            AsymptoticDoc::Zero => AsymptoticMap::Zero,
            AsymptoticDoc::Linear { matrix } => AsymptoticMap::Linear(matrix.to_matrix().map_err(D::Error::custom)?),
            AsymptoticDoc::NumericOnly { matrix, .. } => {
                AsymptoticMap::NumericOnly(matrix.to_matrix().map_err(D::Error::custom)?)
            }
        })
    }
}

/// `T(p x) / p`.
pub fn limit_estimate(net: &Network, x: &[f64], p: f64) -> Result<Vec<f64>> {
    let scaled: Vec<f64> = x.iter().map(|v| v * p).collect();
    Ok(net.forward(&scaled)?.into_iter().map(|v| v / p).collect())
}

/// Asymptotic map of a self-map network.
pub fn asymptotic_map(net: &Network) -> Result<AsymptoticMap> {
    net.require_self_map()?;
    let layers = net.layers();
    if layers.iter().any(|l| l.all_in_class(AsymptoteClass::Saturating)) {
        return Ok(AsymptoticMap::Zero);
    }
    if layers.iter().all(|l| l.all_in_class(AsymptoteClass::Linear)) {
        return Ok(AsymptoticMap::Linear(net.weight_product()));
    }
    let k = net.input_dim();
    let mut m = DMatrix::zeros(k, k);
    for j in 0..k {
        let mut e = vec![0.0; k];
        e[j] = 1.0;
        let col = limit_estimate(net, &e, LIMIT_SCALE)?;
        m.set_column(j, &nalgebra::DVector::from_vec(col));
    }
    Ok(AsymptoticMap::NumericOnly(m))
}
