//! End-to-end run: generate spectra, train the autoencoder, certify it and
//! write the artifacts.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{constant_predictor_loss, init_network, reconstruction_loss, train_with, Dataset, EpochStats, TrainConfig};
use crate::certify::{certify, norm_bounds, Budget, Certificate, Verdict};
use crate::error::Result;
use crate::fixed_point::{iterate_fixed_point, power_at_zero};
use crate::linalg::{sup_norm_diff, Norm};
use crate::model_io;
use crate::network::{ConeOperator, Network};
use crate::report::{self, Report, ReportBody};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBounds {
    pub norm: Norm,
    pub product: f64,
    pub composite: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproduceSummary {
    pub config: TrainConfig,
    pub train_samples: usize,
    pub heldout_samples: usize,
    pub untrained_loss: f64,
    pub final_loss: f64,
    /// Loss of predicting the training-set mean for every sample.
    pub constant_loss: f64,
    pub heldout_loss: f64,
    /// Sup-norm reconstruction error on the plotted held-out sample.
    pub heldout_error: f64,
    pub spectral_radius: f64,
    pub primitivity_exponent: Option<usize>,
    pub verdict: Verdict,
    pub norm_bounds: Vec<NormBounds>,
    /// `T^m(0)` for the certified `m`, or for `m_max` when none was found.
    pub power_at_zero: Vec<f64>,
    pub fixed_point: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ReproduceOutcome {
    pub network: Network,
    pub certificate: Certificate,
    pub loss_history: Vec<f64>,
    pub heldout_input: Vec<f64>,
    pub heldout_output: Vec<f64>,
    pub summary: ReproduceSummary,
}

/// File names written by [`reproduce_autoencoder`].
pub const ARTIFACTS: [&str; 7] = [
    "model.json",
    "certificate.json",
    "summary.json",
    "loss.csv",
    "power_at_zero.csv",
    "fixed_point.csv",
    "reconstruction.csv",
];

pub fn reproduce_autoencoder<F>(
    cfg: &TrainConfig,
    budget: &Budget,
    outdir: Option<&Path>,
    progress: F,
) -> Result<ReproduceOutcome>
where
    F: FnMut(&EpochStats),
{
    let mut progress = progress;
    cfg.validate()?;
    let data = Dataset::generate(cfg.seed, cfg.input_dim, cfg.samples)?.samples;
    let heldout_n =
        ((cfg.samples as f64 * cfg.holdout_fraction).round() as usize).clamp(1, cfg.samples.saturating_sub(1));
    let (train_set, heldout) = data.split_at(cfg.samples - heldout_n);

    let init = init_network(cfg)?;
    let untrained_loss = reconstruction_loss(&init, train_set)?;
    let (network, loss_history) = train_with(cfg, &init, train_set, |s, _| progress(s))?;
    let certificate = certify(&network, budget)?;

    let heldout_input = heldout[0].clone();
    let heldout_output = network.forward(&heldout_input)?;
    let power = power_at_zero(&network, certificate.primitivity_exponent.unwrap_or(budget.m_max))?;
    let fixed_point = match &certificate.fixed_point {
        Some(fp) => fp.x.clone(),
        None => iterate_fixed_point(&network, &vec![0.0; network.input_dim()], budget.tol, budget.max_iter)?.x,
    };
    let norm_bounds = Norm::ALL
        .iter()
        .map(|&norm| {
            let (product, composite) = norm_bounds(&network, norm)?;
            Ok(NormBounds {
                norm,
                product,
                composite,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let summary = ReproduceSummary {
        config: *cfg,
        train_samples: train_set.len(),
        heldout_samples: heldout.len(),
        untrained_loss,
        final_loss: loss_history.last().copied().unwrap_or(untrained_loss),
        constant_loss: constant_predictor_loss(train_set),
        heldout_loss: reconstruction_loss(&network, heldout)?,
        heldout_error: sup_norm_diff(&heldout_output, &heldout_input),
        spectral_radius: certificate.spectral_radius,
        primitivity_exponent: certificate.primitivity_exponent,
        verdict: certificate.verdict,
        norm_bounds,
        power_at_zero: power,
        fixed_point,
    };
    let outcome = ReproduceOutcome {
        network,
        certificate,
        loss_history,
        heldout_input,
        heldout_output,
        summary,
    };
    if let Some(dir) = outdir {
        write_artifacts(&outcome, dir)?;
    }
    Ok(outcome)
}

fn write_artifacts(o: &ReproduceOutcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    model_io::save(&o.network, dir.join(ARTIFACTS[0]))?;
    let cert = Report::new("reproduce", ReportBody::Certificate(o.certificate.clone()));
    std::fs::write(dir.join(ARTIFACTS[1]), report::to_json(&cert))?;
    let summary = Report::new("reproduce", ReportBody::Reproduce(o.summary.clone()));
    std::fs::write(dir.join(ARTIFACTS[2]), report::to_json(&summary))?;
    report::write_series_csv(dir.join(ARTIFACTS[3]), &o.loss_history, None)?;
    report::write_series_csv(dir.join(ARTIFACTS[4]), &o.summary.power_at_zero, None)?;
    report::write_series_csv(dir.join(ARTIFACTS[5]), &o.summary.fixed_point, None)?;
    report::write_series_csv(dir.join(ARTIFACTS[6]), &o.heldout_output, Some(&o.heldout_input))?;
    Ok(())
}

impl ReproduceOutcome {
    /// Residual of the reported fixed point.
    pub fn fixed_point_residual(&self) -> f64 {
        let x = &self.summary.fixed_point;
        sup_norm_diff(&self.network.apply(x), x)
    }
}
