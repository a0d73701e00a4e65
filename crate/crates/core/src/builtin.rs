//! Non-network cone maps with known fixed-point sets, used to exercise the
//! interval scan and the fixed-point iteration.

use std::fmt;
use std::str::FromStr;

use crate::cone::{ConeMap, Properties};
use crate::error::Error;
use crate::network::ConeOperator;

/// `f(x, y) = (x, min(2, y))`. Its fixed points with `y > 0` are exactly
/// `(x, y)` with `0 < y <= 2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CappedSecond;

impl ConeOperator for CappedSecond {
    fn input_dim(&self) -> usize {
        2
    }

    fn output_dim(&self) -> usize {
        2
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        vec![x[0], x[1].min(2.0)]
    }
}

/// Gauss arithmetic-geometric mean step `f(x, y) = ((x + y) / 2, sqrt(x y))`.
/// Every point of the diagonal is fixed and iteration from `(x, y)` converges
/// to `(agm(x, y), agm(x, y))`.
#[derive(Debug, Clone, Copy, Default)]
pub struct GaussAgm;

impl ConeOperator for GaussAgm {
    fn input_dim(&self) -> usize {
        2
    }

    fn output_dim(&self) -> usize {
        2
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        vec![0.5 * (x[0] + x[1]), (x[0] * x[1]).sqrt()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    CappedSecond,
    GaussAgm,
}

impl Builtin {
    pub const ALL: [Builtin; 2] = [Builtin::CappedSecond, Builtin::GaussAgm];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::CappedSecond => "capped",
            Builtin::GaussAgm => "gauss-agm",
        }
    }

    /// A fixed point to anchor interval scans at.
    pub fn anchor(self) -> Vec<f64> {
        vec![1.0, 1.0]
    }

    pub fn operator(self) -> Box<dyn ConeOperator + Send> {
        match self {
            Builtin::CappedSecond => Box::new(CappedSecond),
            Builtin::GaussAgm => Box::new(GaussAgm),
        }
    }

    /// Both maps are monotonic and weakly scalable; neither is scalable.
    pub fn cone_map(self) -> ConeMap {
        let declared = Properties {
            monotonic: true,
            weakly_scalable: true,
            ..Default::default()
        };
        match self {
            Builtin::CappedSecond => ConeMap::new(self.name(), 2, 2, declared, |x| CappedSecond.apply(x)),
            Builtin::GaussAgm => ConeMap::new(self.name(), 2, 2, declared, |x| GaussAgm.apply(x)),
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown builtin map '{s}' (expected capped or gauss-agm)")))
    }
}
