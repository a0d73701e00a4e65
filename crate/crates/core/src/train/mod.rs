//! Nonnegative autoencoder trained on synthetic angular spectra.
//!
//! The network is `input -> h1 -> h2 -> h3 -> input` with tanh on the three
//! hidden layers and ReLU on the output. Training minimizes the mean squared
//! reconstruction error with mini-batch Adam; after every update all negative
//! weights and biases are clipped to zero, so the trained model always
//! satisfies the nonnegativity invariant of [`Network`].

pub mod mixture;
pub mod reproduce;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;
use crate::error::{dim_mismatch, Error, Result};
use crate::network::{Layer, Network};
use crate::rng;

pub use mixture::{random_mixture, sample_spectrum, Dataset, MixtureSpec};
pub use reproduce::{reproduce_autoencoder, ReproduceOutcome, ReproduceSummary};

/// Stream ids reserved for initialization and shuffling; data samples use
/// streams counting up from zero.
const INIT_STREAM: u64 = u64::MAX;
const SHUFFLE_STREAM_BASE: u64 = u64::MAX / 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub input_dim: usize,
    pub hidden_dims: [usize; 3],
    pub samples: usize,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Initial weights are uniform on `[0, init_scale]`.
    #[serde(default = "unit_scale")]
    pub init_scale: f64,
    /// Fraction of the samples held out from training.
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl TrainConfig {
    /// 36-40-8-40-36, 5,000 samples, 200 epochs.
    pub fn desk() -> Self {
        Self {
            input_dim: 36,
            hidden_dims: [40, 8, 40],
            samples: 5_000,
            epochs: 200,
            batch: 32,
            lr: 0.005,
            beta1: 0.5,
            beta2: 0.999,
            adam_eps: 1e-8,
            init_scale: 1.0,
            holdout_fraction: 0.1,
            seed: crate::certify::DEFAULT_SEED,
        }
    }

    /// 180-200-40-200-180, 50,000 samples, 2,000 epochs.
    pub fn full() -> Self {
        Self {
            input_dim: 180,
            hidden_dims: [200, 40, 200],
            samples: 50_000,
            epochs: 2_000,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims_ok = self.input_dim > 0 && self.hidden_dims.iter().all(|&d| d > 0);
        let checks = [
            (dims_ok, "all layer widths must be positive"),
            (
                self.hidden_dims[1] < self.input_dim,
                "the bottleneck must be narrower than the input",
            ),
            (self.batch > 0, "batch size must be positive"),
            (
                self.lr >= 0.0 && self.lr.is_finite(),
                "learning rate must be finite and >= 0",
            ),
            ((0.0..1.0).contains(&self.beta1), "beta1 must lie in [0, 1)"),
            ((0.0..1.0).contains(&self.beta2), "beta2 must lie in [0, 1)"),
            (self.adam_eps > 0.0, "adam_eps must be positive"),
            (
                self.init_scale >= 0.0 && self.init_scale.is_finite(),
                "init_scale must be finite and >= 0",
            ),
            (
                (0.0..1.0).contains(&self.holdout_fraction),
                "holdout_fraction must lie in [0, 1)",
            ),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::InvalidConfig((*msg).into())),
            None => Ok(()),
        }
    }

    pub fn widths(&self) -> [usize; 5] {
        let [a, b, c] = self.hidden_dims;
        [self.input_dim, a, b, c, self.input_dim]
    }
}

fn unit_scale() -> f64 {
    1.0
}

/// Weights uniform on `[0, init_scale]` (by default `[0, 1]`), biases zero;
/// tanh on hidden layers, ReLU on the output.
pub fn init_network(cfg: &TrainConfig) -> Result<Network> {
    cfg.validate()?;
    let mut r = rng::stream(cfg.seed, INIT_STREAM);
    let widths = cfg.widths();
    let layers = (0..4)
        .map(|i| {
            let (fan_in, fan_out) = (widths[i], widths[i + 1]);
            let w = DMatrix::from_fn(fan_out, fan_in, |_, _| r.gen_range(0.0..=cfg.init_scale));
            let kind = if i == 3 {
                ActivationKind::Relu
            } else {
                ActivationKind::Tanh
            };
            Layer::uniform(w, DVector::zeros(fan_out), kind)
        })
        .collect::<Result<Vec<_>>>()?;
    Network::new(layers)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

fn activate_rows(z: &DMatrix<f64>, kinds: &[ActivationKind], f: impl Fn(&ActivationKind, f64) -> f64) -> DMatrix<f64> {
    DMatrix::from_fn(z.nrows(), z.ncols(), |i, j| f(&kinds[i], z[(i, j)]))
}

/// Mean squared reconstruction error over all entries of the batch.
pub fn reconstruction_loss(net: &Network, batch: &[Vec<f64>]) -> Result<f64> {
    Ok(loss_and_gradient(net, batch, false)?.0)
}

/// Batch loss `(1 / (B d)) sum_b ||T(x_b) - x_b||^2` and its gradient with
/// respect to every weight and bias, by reverse-mode differentiation.
pub fn batch_gradient(net: &Network, batch: &[Vec<f64>]) -> Result<(f64, Vec<LayerGradient>)> {
    loss_and_gradient(net, batch, true)
}

fn batch_matrix(net: &Network, batch: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let d = net.input_dim();
    if net.output_dim() != d {
        return Err(Error::NotSelfMap {
            input: d,
            output: net.output_dim(),
        });
    }
    if batch.is_empty() {
        return Err(Error::InvalidConfig("empty batch".into()));
    }
    if let Some(x) = batch.iter().find(|x| x.len() != d) {
        return Err(dim_mismatch("training sample", d, x.len()));
    }
    Ok(DMatrix::from_fn(d, batch.len(), |i, j| batch[j][i]))
}

fn loss_and_gradient(net: &Network, batch: &[Vec<f64>], want_grad: bool) -> Result<(f64, Vec<LayerGradient>)> {
    let x = batch_matrix(net, batch)?;
    let scale = 1.0 / (x.nrows() * x.ncols()) as f64;
    let mut inputs = Vec::with_capacity(net.layers().len());
    let mut pre = Vec::with_capacity(net.layers().len());
    let mut a = x.clone();
    for layer in net.layers() {
        let mut z = layer.weights() * &a;
        for mut col in z.column_iter_mut() {
            col += layer.bias();
        }
        let next = activate_rows(&z, layer.activations(), |k, v| k.eval(v));
        inputs.push(std::mem::replace(&mut a, next));
        pre.push(z);
    }
    let diff = &a - &x;
    let loss = diff.norm_squared() * scale;
    if !want_grad {
        return Ok((loss, vec![]));
    }

    let mut upstream = diff * (2.0 * scale);
    let mut grads = Vec::with_capacity(net.layers().len());
    for (i, layer) in net.layers().iter().enumerate().rev() {
        let dz = upstream.component_mul(&activate_rows(&pre[i], layer.activations(), |k, v| k.derivative(v)));
        let weights = &dz * inputs[i].transpose();
        let bias = dz.column_sum();
        upstream = layer.weights().transpose() * &dz;
        grads.push(LayerGradient { weights, bias });
    }
    grads.reverse();
    Ok((loss, grads))
}

struct AdamState {
    m: Vec<LayerGradient>,
    v: Vec<LayerGradient>,
    t: i32,
}

impl AdamState {
    fn new(net: &Network) -> Self {
        let zeros: Vec<LayerGradient> = net
            .layers()
            .iter()
            .map(|l| LayerGradient {
                weights: DMatrix::zeros(l.output_dim(), l.input_dim()),
                bias: DVector::zeros(l.output_dim()),
            })
            .collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    /// One bias-corrected Adam step followed by clipping at zero. The moment
    /// estimates are kept across clips.
    fn step(&mut self, net: &mut Network, grads: &[LayerGradient], cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            *p -= cfg.lr * (*m / c1) / ((*v / c2).sqrt() + cfg.adam_eps);
            *p = p.max(0.0);
        };
        for (l, layer) in net.layers_mut().iter_mut().enumerate() {
            let (g, m, v) = (&grads[l], &mut self.m[l], &mut self.v[l]);
            for (k, p) in layer.weights_mut().iter_mut().enumerate() {
                update(p, g.weights[k], &mut m.weights[k], &mut v.weights[k]);
            }
            for (k, p) in layer.bias_mut().iter_mut().enumerate() {
                update(p, g.bias[k], &mut m.bias[k], &mut v.bias[k]);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean training loss over the epoch's batches, weighted by batch size.
    pub loss: f64,
}

/// Trains a copy of `net` on `data`; see [`train_with`].
pub fn train(cfg: &TrainConfig, net: &Network, data: &[Vec<f64>]) -> Result<(Network, Vec<f64>)> {
    train_with(cfg, net, data, |_, _| {})
}

/// Mini-batch Adam with clipping. Batches are drawn from a fresh permutation
/// each epoch; `observe` sees the statistics and the network after every
/// epoch.
pub fn train_with<F>(cfg: &TrainConfig, net: &Network, data: &[Vec<f64>], mut observe: F) -> Result<(Network, Vec<f64>)>
where
    F: FnMut(&EpochStats, &Network),
{
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidConfig("no training data".into()));
    }
    let mut net = net.clone();
    let mut adam = AdamState::new(&net);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut batch = Vec::with_capacity(cfg.batch);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng::stream(cfg.seed, SHUFFLE_STREAM_BASE + epoch as u64));
        let mut total = 0.0;
        for (b, chunk) in order.chunks(cfg.batch).enumerate() {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| data[i].clone()));
            let (loss, grads) = batch_gradient(&net, &batch)?;
            if !loss.is_finite()
                || grads
                    .iter()
                    .any(|g| !g.weights.iter().chain(g.bias.iter()).all(|v| v.is_finite()))
            {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            total += loss * chunk.len() as f64;
            adam.step(&mut net, &grads, cfg);
        }
        let stats = EpochStats {
            epoch,
            loss: total / data.len() as f64,
        };
        history.push(stats.loss);
        observe(&stats, &net);
    }
    Ok((net, history))
}

/// Mean squared error of predicting every sample by the coordinatewise mean
/// of `data`.
pub fn constant_predictor_loss(data: &[Vec<f64>]) -> f64 {
    let d = data.first().map_or(0, |x| x.len());
    if d == 0 {
        return 0.0;
    }
    let n = data.len() as f64;
    let mean: Vec<f64> = (0..d).map(|j| data.iter().map(|x| x[j]).sum::<f64>() / n).collect();
    data.iter()
        .flat_map(|x| x.iter().zip(&mean).map(|(a, b)| (a - b).powi(2)))
        .sum::<f64>()
        / (n * d as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind::{Relu, Tanh};

    fn small_net() -> Network {
        let mut r = rng::seeded(11);
        let widths = [3, 4, 2, 4, 3];
        let layers = (0..4)
            .map(|i| {
                let w = DMatrix::from_fn(widths[i + 1], widths[i], |_, _| r.gen_range(0.1..0.8));
                let b = DVector::from_fn(widths[i + 1], |_, _| r.gen_range(0.1..0.5));
                Layer::uniform(w, b, if i == 3 { Relu } else { Tanh }).unwrap()
            })
            .collect();
        Network::new(layers).unwrap()
    }

    fn small_batch() -> Vec<Vec<f64>> {
        let mut r = rng::seeded(12);
        (0..5)
            .map(|_| (0..3).map(|_| r.gen_range(0.0..2.0)).collect())
            .collect()
    }

    #[test]
    fn gradient_matches_central_differences() {
        let net = small_net();
        let batch = small_batch();
        let (_, grads) = batch_gradient(&net, &batch).unwrap();
        let h = 1e-5;
        let mut worst = 0.0f64;
        for (l, grad) in grads.iter().enumerate() {
            let (rows, cols) = net.layers()[l].weights().shape();
            for k in 0..rows * cols + rows {
                let shifted = |delta: f64| {
                    let mut n = net.clone();
                    let layer = &mut n.layers_mut()[l];
                    if k < rows * cols {
                        layer.weights_mut()[k] += delta;
                    } else {
                        layer.bias_mut()[k - rows * cols] += delta;
                    }
                    reconstruction_loss(&n, &batch).unwrap()
                };
                let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
                let g = if k < rows * cols {
                    grad.weights[k]
                } else {
                    grad.bias[k - rows * cols]
                };
                worst = worst.max((fd - g).abs());
            }
        }
        assert!(worst < 1e-6, "worst gradient error {worst}");
    }

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let cfg = TrainConfig {
            input_dim: 3,
            hidden_dims: [4, 2, 4],
            epochs: 3,
            batch: 2,
            lr: 0.0,
            ..TrainConfig::desk()
        };
        let net = small_net();
        let (trained, history) = train(&cfg, &net, &small_batch()).unwrap();
        assert_eq!(trained, net);
        assert_eq!(history.len(), 3);
    }

    #[test]
    fn training_keeps_parameters_nonnegative_and_is_deterministic() {
        let cfg = TrainConfig {
            input_dim: 12,
            hidden_dims: [10, 4, 10],
            samples: 200,
            epochs: 5,
            ..TrainConfig::desk()
        };
        let data = Dataset::generate(cfg.seed, cfg.input_dim, cfg.samples).unwrap().samples;
        let init = init_network(&cfg).unwrap();
        let mut epochs = 0;
        let (_, h1) = train_with(&cfg, &init, &data, |_, n| {
            epochs += 1;
            assert!(n.is_nonnegative());
        })
        .unwrap();
        assert_eq!(epochs, 5);
        let (_, h2) = train(&cfg, &init, &data).unwrap();
        assert_eq!(h1, h2);
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let cfg = TrainConfig::desk();
        let a = init_network(&cfg).unwrap();
        assert_eq!(a, init_network(&cfg).unwrap());
        assert_eq!(a.layers().len(), 4);
        for l in a.layers() {
            assert!(l.weights().iter().all(|&w| (0.0..=1.0).contains(&w)));
            assert!(l.bias().iter().all(|&b| b == 0.0));
        }
        assert_eq!(a.layers()[3].activations()[0], Relu);
        assert_eq!(a.layers()[0].activations()[0], Tanh);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::desk().validate().is_ok());
        assert!(TrainConfig::full().validate().is_ok());
        let bad = TrainConfig {
            hidden_dims: [40, 40, 40],
            ..TrainConfig::desk()
        };
        assert!(bad.validate().is_err());
        assert!(TrainConfig {
            batch: 0,
            ..TrainConfig::desk()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn constant_predictor_baseline() {
        let data = vec![vec![1.0, 0.0], vec![3.0, 2.0]];
        assert_eq!(constant_predictor_loss(&data), 1.0);
    }
}
