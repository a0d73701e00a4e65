//! Structural classification of a network as monotonic and weakly scalable
//! (`monotone_weakly_scalable`) or additionally scalable (`monotone_scalable`).
//!
//! Nothing here evaluates the network. Every conclusion is derived from the
//! weights, biases and activation metadata, and is recorded as a sequence of
//! [`DerivationStep`]s naming the construction rule that was applied.

use serde::{Deserialize, Serialize};

use crate::network::{Layer, Network};
use crate::EPS_POS;

/// Construction and verdict rules, serialized in snake case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// Affine map with nonnegative weights and biases is monotonic and weakly
    /// scalable.
    NonnegativeAffine,
    /// Affine map with nonnegative weights and a positive bias is scalable.
    PositiveBiasAffine,
    /// Weakly scalable affine map followed by a scalable activation.
    ScalableActivation,
    /// Scalable affine map followed by a strictly monotone, weakly scalable
    /// activation.
    StrictActivationAfterScalable,
    /// All layers monotonic and weakly scalable, hence so is the network.
    ChainWeaklyScalable,
    /// One scalable layer followed only by strictly monotone weakly scalable
    /// layers makes the network scalable.
    ChainScalable,
    /// A scalable coordinate feeding a strictly monotone neuron through a
    /// positive weight makes that neuron scalable.
    CoordinatePropagation,
    /// A layer made of sigmoid neurons is scalable.
    SigmoidLayer,
    /// Positive-bias layer with no capped ReLU or saturated linear neurons in
    /// it or after it.
    PositiveBiasNoCaps,
    /// Sigmoid layer with no capped ReLU or saturated linear neurons after it.
    SigmoidLayerNoCaps,
    /// Monotonic, weakly scalable and spectral radius below one: a fixed point
    /// exists.
    ExistenceBelowOne,
    /// Scalable: a fixed point exists iff the spectral radius is below one,
    /// and it is unique and positive.
    UniqueScalable,
    /// Concave activations and `T^m(0) >> 0`: same conclusion as [`Rule::UniqueScalable`].
    UniqueConcavePrimitive,
    /// `T^m(0) >> 0` and spectral radius above one: no fixed points.
    EmptyStronglyPrimitive,
    /// Spectral radius above one: no fixed points in the interior.
    NoInteriorFixedPoint,
    /// `T^m(0) >> 0` with spectral radius below one: every fixed point is
    /// interior and the orbit of zero converges to the least one.
    InteriorFixedPoints,
}

impl Rule {
    pub fn code(self) -> &'static str {
        match self {
            Rule::NonnegativeAffine => "nonnegative_affine",
            Rule::PositiveBiasAffine => "positive_bias_affine",
            Rule::ScalableActivation => "scalable_activation",
            Rule::StrictActivationAfterScalable => "strict_activation_after_scalable",
            Rule::ChainWeaklyScalable => "chain_weakly_scalable",
            Rule::ChainScalable => "chain_scalable",
            Rule::CoordinatePropagation => "coordinate_propagation",
            Rule::SigmoidLayer => "sigmoid_layer",
            Rule::PositiveBiasNoCaps => "positive_bias_no_caps",
            Rule::SigmoidLayerNoCaps => "sigmoid_layer_no_caps",
            Rule::ExistenceBelowOne => "existence_below_one",
            Rule::UniqueScalable => "unique_scalable",
            Rule::UniqueConcavePrimitive => "unique_concave_primitive",
            Rule::EmptyStronglyPrimitive => "empty_strongly_primitive",
            Rule::NoInteriorFixedPoint => "no_interior_fixed_point",
            Rule::InteriorFixedPoints => "interior_fixed_points",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PropertyLevel {
    /// Monotonic and weakly scalable.
    #[serde(rename = "monotone_weakly_scalable")]
    MonotoneWeaklyScalable,
    /// Monotonic and scalable (hence also weakly scalable).
    #[serde(rename = "monotone_scalable")]
    MonotoneScalable,
    /// Nothing provable; only produced for networks with negative parameters.
    #[serde(rename = "unknown")]
    Unknown,
}

impl PropertyLevel {
    pub fn code(self) -> &'static str {
        match self {
            PropertyLevel::MonotoneWeaklyScalable => "monotone_weakly_scalable",
            PropertyLevel::MonotoneScalable => "monotone_scalable",
            PropertyLevel::Unknown => "unknown",
        }
    }

    pub fn is_weakly_scalable(self) -> bool {
        !matches!(self, PropertyLevel::Unknown)
    }

    pub fn is_scalable(self) -> bool {
        matches!(self, PropertyLevel::MonotoneScalable)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivationStep {
    pub rule: Rule,
    /// Zero-based layer indices the rule was applied to.
    pub layers: Vec<usize>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl DerivationStep {
    fn new(rule: Rule, layers: Vec<usize>, detail: impl Into<String>) -> Self {
        Self {
            rule,
            layers,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyClass {
    pub level: PropertyLevel,
    pub derivation: Vec<DerivationStep>,
}

impl PropertyClass {
    pub fn rules(&self) -> Vec<Rule> {
        self.derivation.iter().map(|s| s.rule).collect()
    }
}

fn bias_positive(layer: &Layer) -> bool {
    layer.bias().iter().all(|&b| b > EPS_POS)
}

fn all_sigmoid(layer: &Layer) -> bool {
    layer.activations().iter().all(|a| a.scalable_alone())
}

/// Derives the strongest provable property class.
///
/// Every nonnegative network is monotone and weakly scalable. The upgrade to scalable is tried
/// first at layer granularity (a scalable layer followed by strictly monotone
/// layers) and then at neuron granularity, tracking which coordinates of each
/// layer output are provably scalable.
///
/// A layer counts as strictly monotone when its activations are strictly
/// increasing on the nonnegative half-line and its weight matrix has no zero
/// row and no zero column.
pub fn classify(net: &Network) -> PropertyClass {
    if !net.is_nonnegative() {
        return PropertyClass {
            level: PropertyLevel::Unknown,
            derivation: Vec::new(),
        };
    }
    let layers = net.layers();
    let n = layers.len();
    let all: Vec<usize> = (0..n).collect();
    let mut derivation = vec![
        DerivationStep::new(Rule::NonnegativeAffine, all.clone(), ""),
        DerivationStep::new(Rule::ChainWeaklyScalable, all, ""),
    ];

    if let Some(steps) = layer_level_upgrade(layers) {
        derivation.extend(steps);
        return PropertyClass {
            level: PropertyLevel::MonotoneScalable,
            derivation,
        };
    }
    if let Some(steps) = coordinate_upgrade(layers) {
        derivation.extend(steps);
        return PropertyClass {
            level: PropertyLevel::MonotoneScalable,
            derivation,
        };
    }
    PropertyClass {
        level: PropertyLevel::MonotoneWeaklyScalable,
        derivation,
    }
}

fn layer_level_upgrade(layers: &[Layer]) -> Option<Vec<DerivationStep>> {
    let n = layers.len();
    for i0 in (0..n).rev() {
        let tail_strict = layers[i0 + 1..].iter().all(Layer::is_strictly_monotone);
        if !tail_strict {
            continue;
        }
        let layer = &layers[i0];
        let tail: Vec<usize> = (i0..n).collect();
        let strict_acts = layer.activations().iter().all(|a| a.strictly_monotone_on_nonneg());
        if bias_positive(layer) && strict_acts {
            return Some(vec![
                DerivationStep::new(Rule::PositiveBiasAffine, vec![i0], "bias >> 0"),
                DerivationStep::new(Rule::StrictActivationAfterScalable, vec![i0], ""),
                DerivationStep::new(Rule::PositiveBiasNoCaps, tail.clone(), "later layers strictly monotone"),
                DerivationStep::new(Rule::ChainScalable, tail, ""),
            ]);
        }
        if all_sigmoid(layer) {
            return Some(vec![
                DerivationStep::new(Rule::SigmoidLayer, vec![i0], ""),
                DerivationStep::new(Rule::ScalableActivation, vec![i0], ""),
                DerivationStep::new(Rule::SigmoidLayerNoCaps, tail.clone(), "later layers strictly monotone"),
                DerivationStep::new(Rule::ChainScalable, tail, ""),
            ]);
        }
    }
    None
}

fn coordinate_upgrade(layers: &[Layer]) -> Option<Vec<DerivationStep>> {
    let mut steps = Vec::new();
    let mut prev: Option<Vec<bool>> = None;
    for (i, layer) in layers.iter().enumerate() {
        let w = layer.weights();
        let mut scalable = vec![false; layer.output_dim()];
        let (mut by_sigmoid, mut by_bias, mut by_propagation) = (0, 0, 0);
        for (j, flag) in scalable.iter_mut().enumerate() {
            let act = layer.activations()[j];
            let strict = act.strictly_monotone_on_nonneg();
            if act.scalable_alone() {
                by_sigmoid += 1;
                *flag = true;
            } else if strict && layer.bias()[j] > EPS_POS {
                by_bias += 1;
                *flag = true;
            } else if strict {
                if let Some(p) = &prev {
                    if p.iter().enumerate().any(|(l, &s)| s && w[(j, l)] > EPS_POS) {
                        by_propagation += 1;
                        *flag = true;
                    }
                }
            }
        }
        if by_sigmoid > 0 {
            steps.push(DerivationStep::new(
                Rule::SigmoidLayer,
                vec![i],
                format!("{by_sigmoid} sigmoid neurons"),
            ));
        }
        if by_bias > 0 {
            steps.push(DerivationStep::new(
                Rule::PositiveBiasAffine,
                vec![i],
                format!("{by_bias} neurons with positive bias"),
            ));
        }
        if by_propagation > 0 {
            steps.push(DerivationStep::new(
                Rule::CoordinatePropagation,
                vec![i - 1, i],
                format!("{by_propagation} neurons fed by scalable coordinates"),
            ));
        }
        prev = Some(scalable);
    }
    let out = prev?;
    out.iter().all(|&s| s).then_some(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind::{self, *};
    use nalgebra::{DMatrix, DVector};

    fn layer(w: DMatrix<f64>, b: f64, kind: ActivationKind) -> Layer {
        let n = w.nrows();
        Layer::uniform(w, DVector::from_element(n, b), kind).unwrap()
    }

    fn full(n: usize, v: f64) -> DMatrix<f64> {
        DMatrix::from_element(n, n, v)
    }

    #[test]
    fn all_relu_zero_bias_is_weakly_scalable() {
        let net = Network::new(vec![layer(full(3, 0.5), 0.0, Relu), layer(full(3, 0.2), 0.0, Relu)]).unwrap();
        let class = classify(&net);
        assert_eq!(class.level, PropertyLevel::MonotoneWeaklyScalable);
        assert_eq!(class.rules(), vec![Rule::NonnegativeAffine, Rule::ChainWeaklyScalable]);
    }

    #[test]
    fn positive_bias_layer_upgrades() {
        let net = Network::new(vec![
            layer(full(3, 0.5), 0.0, Relu),
            layer(full(3, 0.5), 0.3, Tanh),
            layer(full(3, 0.5), 0.0, Relu),
        ])
        .unwrap();
        let class = classify(&net);
        assert_eq!(class.level, PropertyLevel::MonotoneScalable);
        assert!(class.rules().contains(&Rule::PositiveBiasAffine));
        assert!(class.rules().contains(&Rule::ChainScalable));
        let chain = class.derivation.iter().find(|s| s.rule == Rule::ChainScalable).unwrap();
        assert_eq!(chain.layers, vec![1, 2]);
    }

    #[test]
    fn capped_relu_after_source_blocks_upgrade() {
        let net = Network::new(vec![
            layer(full(2, 0.5), 1.0, Tanh),
            layer(full(2, 0.5), 0.0, CappedRelu { beta: 1.0 }),
        ])
        .unwrap();
        assert_eq!(classify(&net).level, PropertyLevel::MonotoneWeaklyScalable);
    }

    #[test]
    fn sigmoid_layer_upgrades() {
        let net = Network::new(vec![layer(full(2, 0.5), 0.0, Sigmoid), layer(full(2, 0.5), 0.0, Relu)]).unwrap();
        let class = classify(&net);
        assert_eq!(class.level, PropertyLevel::MonotoneScalable);
        assert!(class.rules().contains(&Rule::SigmoidLayerNoCaps));
    }

    #[test]
    fn zero_row_after_source_needs_coordinate_rule() {
        // second layer row 1 is zero: the layer is not strictly monotone, and
        // neuron 1 is constant zero, so the network is not scalable.
        let w2 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let net = Network::new(vec![layer(full(2, 0.5), 0.0, Sigmoid), layer(w2, 0.0, Relu)]).unwrap();
        assert_eq!(classify(&net).level, PropertyLevel::MonotoneWeaklyScalable);

        // with a zero column instead, coordinate propagation still proves it
        let w2 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        let net = Network::new(vec![layer(full(2, 0.5), 0.0, Sigmoid), layer(w2, 0.0, Relu)]).unwrap();
        let class = classify(&net);
        assert_eq!(class.level, PropertyLevel::MonotoneScalable);
        assert!(class.rules().contains(&Rule::CoordinatePropagation));
    }

    #[test]
    fn mixed_layer_propagates_per_coordinate() {
        // layer 0: neuron 0 sigmoid, neuron 1 relu (not scalable alone)
        let l0 = Layer::new(full(2, 0.5), DVector::zeros(2), vec![Sigmoid, Relu]).unwrap();
        let w1 = DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 0.4, 0.1]);
        let l1 = layer(w1, 0.0, Tanh);
        let class = classify(&Network::new(vec![l0, l1]).unwrap());
        assert_eq!(class.level, PropertyLevel::MonotoneScalable);
        assert_eq!(class.derivation.last().unwrap().rule, Rule::CoordinatePropagation);
    }

    #[test]
    fn negative_parameters_are_unknown() {
        let l = Layer::new_unchecked(DMatrix::from_element(1, 1, -1.0), DVector::zeros(1), vec![Relu]).unwrap();
        let net = Network::new_unchecked(vec![l]).unwrap();
        let class = classify(&net);
        assert_eq!(class.level, PropertyLevel::Unknown);
        assert!(!class.level.is_weakly_scalable());
    }

    #[test]
    fn rule_codes_serialize() {
        assert_eq!(
            serde_json::to_string(&Rule::NonnegativeAffine).unwrap(),
            "\"nonnegative_affine\""
        );
        assert_eq!(
            serde_json::to_string(&PropertyLevel::MonotoneScalable).unwrap(),
            "\"monotone_scalable\""
        );
        for r in [
            Rule::ChainScalable,
            Rule::CoordinatePropagation,
            Rule::InteriorFixedPoints,
        ] {
            assert_eq!(serde_json::to_string(&r).unwrap(), format!("\"{}\"", r.code()));
        }
    }
}
