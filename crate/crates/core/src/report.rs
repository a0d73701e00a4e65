//! Versioned machine-readable reports and CSV series.
//!
//! A report is a JSON object
//!
//! ```json
//! { "format": "pfnet-report", "version": 1, "command": "certify",
//!   "kind": "certificate", "data": { ... } }
//! ```
//!
//! where `kind` selects the shape of `data`. CSV series have the header
//! `index,value` or `index,value,reference`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::certify::Certificate;
use crate::cone::Property;
use crate::error::{Error, Result};
use crate::fixed_point::FixedPointRun;
use crate::interval::IntervalEstimate;
use crate::oracle::{OracleConfig, OracleVerdict};
use crate::train::{ReproduceSummary, TrainConfig};

pub const REPORT_FORMAT: &str = "pfnet-report";
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub source: String,
    pub x0: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub run: FixedPointRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalReport {
    pub source: String,
    pub estimate: IntervalEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub property: Property,
    pub declared: bool,
    pub verdict: OracleVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub source: String,
    pub config: OracleConfig,
    pub rows: Vec<AuditRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub path: String,
    pub seed: u64,
    pub dim: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub config: TrainConfig,
    pub model_path: String,
    pub loss_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum ReportBody {
    Certificate(Certificate),
    FixedPoint(FixedPointReport),
    Interval(IntervalReport),
    Audit(AuditReport),
    Dataset(DatasetReport),
    Training(TrainingReport),
    Reproduce(ReproduceSummary),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format: String,
    pub version: u32,
    pub command: String,
    #[serde(flatten)]
    pub body: ReportBody,
}

impl Report {
    pub fn new(command: impl Into<String>, body: ReportBody) -> Self {
        Self {
            format: REPORT_FORMAT.into(),
            version: REPORT_VERSION,
            command: command.into(),
            body,
        }
    }
}

pub fn to_json(report: &Report) -> String {
    serde_json::to_string_pretty(report).expect("reports contain only serializable data")
}

pub fn parse(text: &str) -> Result<Report> {
    let r: Report = serde_json::from_str(text)?;
    if r.format != REPORT_FORMAT {
        return Err(Error::Format(format!(
            "expected format '{REPORT_FORMAT}', found '{}'",
            r.format
        )));
    }
    if r.version != REPORT_VERSION {
        return Err(Error::Format(format!("unsupported report version {}", r.version)));
    }
    Ok(r)
}

/// CSV text with columns `index,value[,reference]`.
pub fn series_csv(values: &[f64], reference: Option<&[f64]>) -> String {
    let mut out = String::from(if reference.is_some() {
        "index,value,reference\n"
    } else {
        "index,value\n"
    });
    for (i, v) in values.iter().enumerate() {
        match reference.and_then(|r| r.get(i)) {
            Some(r) => writeln!(out, "{i},{v:?},{r:?}"),
            None => writeln!(out, "{i},{v:?}"),
        }
        .expect("writing to a String cannot fail");
    }
    out
}

pub fn write_series_csv(path: impl AsRef<Path>, values: &[f64], reference: Option<&[f64]>) -> Result<()> {
    std::fs::write(path, series_csv(values, reference))?;
    Ok(())
}

/// Parses a series written by [`series_csv`] into `(values, reference)`.
pub fn parse_series_csv(text: &str) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty CSV".into()))?;
    let with_ref = match header {
        "index,value" => false,
        "index,value,reference" => true,
        h => return Err(Error::Format(format!("unexpected CSV header '{h}'"))),
    };
    let mut values = Vec::new();
    let mut reference = Vec::new();
    for (row, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let bad = || Error::Format(format!("malformed CSV row {row}: '{line}'"));
        if fields.len() != 2 + with_ref as usize || fields[0].parse::<usize>().ok() != Some(row) {
            return Err(bad());
        }
        values.push(fields[1].parse().map_err(|_| bad())?);
        if with_ref {
            reference.push(fields[2].parse().map_err(|_| bad())?);
        }
    }
    Ok((values, with_ref.then_some(reference)))
}

/// Serde helpers writing non-finite floats as the strings `"inf"`, `"-inf"`
/// and `"nan"` (plain JSON has no representation for them).
pub(crate) mod lenient {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    fn to_repr(v: f64) -> Repr {
        if v.is_finite() {
            Repr::Number(v)
        } else if v.is_nan() {
            Repr::Text("nan".into())
        } else if v > 0.0 {
            Repr::Text("inf".into())
        } else {
            Repr::Text("-inf".into())
        }
    }

    fn from_repr<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(E::custom(format!("expected a number, found '{other}'"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(v.iter().map(|x| to_repr(*x)))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Vec::<Repr>::deserialize(d)?.into_iter().map(from_repr).collect()
        }
    }
}
