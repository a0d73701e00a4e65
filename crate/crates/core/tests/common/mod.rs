//! Random network generators shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pfnet::activation::AsymptoteClass;
use pfnet::{ActivationKind, Layer, Network};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn l1_kinds() -> Vec<ActivationKind> {
    ActivationKind::CATALOG
        .into_iter()
        .filter(|a| a.asymptote_class() == AsymptoteClass::Saturating)
        .collect()
}

pub fn l2_kinds() -> Vec<ActivationKind> {
    ActivationKind::CATALOG
        .into_iter()
        .filter(|a| a.asymptote_class() == AsymptoteClass::Linear)
        .collect()
}

pub fn random_matrix<R: Rng>(r: &mut R, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| r.gen_range(0.0..scale))
}

pub fn random_bias<R: Rng>(r: &mut R, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| r.gen_range(0.0..scale))
}

/// Layer with weights uniform on `[0, w_scale)`, biases on `[0, b_scale)` and
/// activations drawn from `kinds`.
pub fn random_layer<R: Rng>(
    r: &mut R,
    rows: usize,
    cols: usize,
    w_scale: f64,
    b_scale: f64,
    kinds: &[ActivationKind],
) -> Layer {
    let w = random_matrix(r, rows, cols, w_scale);
    let b = random_bias(r, rows, b_scale);
    let acts = (0..rows).map(|_| *kinds.choose(r).unwrap()).collect();
    Layer::new(w, b, acts).unwrap()
}

/// Self-map of dimension `k` through `depth` layers with random hidden widths.
pub fn random_widths<R: Rng>(r: &mut R, k: usize, depth: usize) -> Vec<usize> {
    let mut widths = vec![k];
    widths.extend((1..depth).map(|_| r.gen_range(2..=6)));
    widths.push(k);
    widths
}

pub fn random_net<R: Rng>(
    r: &mut R,
    widths: &[usize],
    w_scale: f64,
    b_scale: f64,
    kinds: &[ActivationKind],
) -> Network {
    let layers = widths
        .windows(2)
        .map(|p| random_layer(r, p[1], p[0], w_scale, b_scale, kinds))
        .collect();
    Network::new(layers).unwrap()
}

pub fn random_point<R: Rng>(r: &mut R, k: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..k).map(|_| r.gen_range(lo..hi)).collect()
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}
