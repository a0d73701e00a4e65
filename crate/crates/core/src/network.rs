//! Nonnegative feed-forward networks.
//!
//! A [`Network`] is a chain of [`Layer`]s, each computing
//! `x -> sigma(W x + b)` with per-neuron activations. Constructors reject
//! negative or non-finite parameters, so every analysis routine may assume
//! the network maps the nonnegative cone into itself.

use nalgebra::{DMatrix, DVector};

use crate::activation::{ActivationKind, AsymptoteClass};
use crate::error::{dim_mismatch, Error, Result};
use crate::EPS_POS;

/// Something that maps the nonnegative cone `R_+^s` into `R_+^p`.
///
/// `apply` does no validation; callers are responsible for passing a vector
/// of length [`input_dim`](ConeOperator::input_dim).
pub trait ConeOperator: Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
}

/// One affine-plus-activation layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    weights: DMatrix<f64>,
    bias: DVector<f64>,
    activations: Vec<ActivationKind>,
}

impl Layer {
    /// Builds a layer, rejecting negative or non-finite parameters and
    /// inconsistent dimensions.
    pub fn new(weights: DMatrix<f64>, bias: DVector<f64>, activations: Vec<ActivationKind>) -> Result<Self> {
        let layer = Self::new_unchecked(weights, bias, activations)?;
        layer.check_parameters(0)?;
        Ok(layer)
    }

    /// Builds a layer checking only dimensions and activation parameters.
    ///
    /// Negative weights and biases are accepted. Such layers break every
    /// monotonicity guarantee; this exists so that property audits can be
    /// run against deliberately broken models.
    pub fn new_unchecked(weights: DMatrix<f64>, bias: DVector<f64>, activations: Vec<ActivationKind>) -> Result<Self> {
        if bias.len() != weights.nrows() {
            return Err(dim_mismatch("layer bias", weights.nrows(), bias.len()));
        }
        if activations.len() != weights.nrows() {
            return Err(dim_mismatch("layer activations", weights.nrows(), activations.len()));
        }
        for (neuron, a) in activations.iter().enumerate() {
            a.validate().map_err(|reason| Error::InvalidActivation {
                layer: 0,
                neuron,
                reason,
            })?;
        }
        Ok(Self {
            weights,
            bias,
            activations,
        })
    }

    /// Same activation for every neuron.
    pub fn uniform(weights: DMatrix<f64>, bias: DVector<f64>, kind: ActivationKind) -> Result<Self> {
        let n = weights.nrows();
        Self::new(weights, bias, vec![kind; n])
    }

    /// Row-major convenience constructor.
    pub fn from_rows(rows: &[Vec<f64>], bias: &[f64], kind: ActivationKind) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(dim_mismatch("weight row", cols, bad.len()));
        }
        let w = DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]);
        Self::uniform(w, DVector::from_column_slice(bias), kind)
    }

    fn check_parameters(&self, layer: usize) -> Result<()> {
        let (rows, cols) = self.weights.shape();
        for (i, j) in (0..rows).flat_map(|i| (0..cols).map(move |j| (i, j))) {
            let w = self.weights[(i, j)];
            let what = format!("weight ({i}, {j})");
            if !w.is_finite() {
                return Err(Error::NonFiniteParameter { layer, what, value: w });
            }
            if w < 0.0 {
                return Err(Error::NegativeParameter { layer, what, value: w });
            }
        }
        for (i, &b) in self.bias.iter().enumerate() {
            let what = format!("bias {i}");
            if !b.is_finite() {
                return Err(Error::NonFiniteParameter { layer, what, value: b });
            }
            if b < 0.0 {
                return Err(Error::NegativeParameter { layer, what, value: b });
            }
        }
        Ok(())
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn bias(&self) -> &DVector<f64> {
        &self.bias
    }

    pub fn activations(&self) -> &[ActivationKind] {
        &self.activations
    }

    pub fn input_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.nrows()
    }

    /// `W x + b`.
    pub fn pre_activation(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.weights * x + &self.bias
    }

    pub fn activate(&self, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(y.len(), y.iter().zip(&self.activations).map(|(&v, a)| a.eval(v)))
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.activate(&self.pre_activation(x))
    }

    /// Every neuron's activation belongs to the given asymptote class.
    pub fn all_in_class(&self, class: AsymptoteClass) -> bool {
        self.activations.iter().all(|a| a.asymptote_class() == class)
    }

    /// Strict monotonicity of the whole layer map on the cone: both
    /// `x < x' => T(x) < T(x')` (no zero column) and `x << x' => T(x) << T(x')`
    /// (no zero row), given strictly increasing activations.
    pub fn is_strictly_monotone(&self) -> bool {
        let acts = self.activations.iter().all(|a| a.strictly_monotone_on_nonneg());
        let rows = self.weights.row_iter().all(|r| r.iter().any(|&w| w > EPS_POS));
        let cols = self.weights.column_iter().all(|c| c.iter().any(|&w| w > EPS_POS));
        acts && rows && cols
    }

    pub(crate) fn weights_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.weights
    }

    pub(crate) fn bias_mut(&mut self) -> &mut DVector<f64> {
        &mut self.bias
    }
}

/// A feed-forward network `T = T_n o ... o T_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
}

/// Per-layer intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// `y_i = W_i x_{i-1} + b_i` for every layer.
    pub pre_activations: Vec<DVector<f64>>,
    /// `x_0` (the input) followed by every layer output.
    pub outputs: Vec<DVector<f64>>,
}

impl Network {
    /// Validates parameters and the dimension chain.
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let net = Self::new_unchecked(layers)?;
        for (i, layer) in net.layers.iter().enumerate() {
            layer.check_parameters(i)?;
        }
        Ok(net)
    }

    /// Validates only the dimension chain; see [`Layer::new_unchecked`].
    pub fn new_unchecked(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::EmptyNetwork);
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[1].input_dim() != pair[0].output_dim() {
                return Err(dim_mismatch(
                    &format!("input width of layer {}", i + 1),
                    pair[0].output_dim(),
                    pair[1].input_dim(),
                ));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn is_self_map(&self) -> bool {
        self.input_dim() == self.output_dim()
    }

    pub fn require_self_map(&self) -> Result<()> {
        if self.is_self_map() {
            Ok(())
        } else {
            Err(Error::NotSelfMap {
                input: self.input_dim(),
                output: self.output_dim(),
            })
        }
    }

    /// Every weight and bias is nonnegative.
    pub fn is_nonnegative(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().all(|&w| w >= 0.0) && l.bias.iter().all(|&b| b >= 0.0))
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(dim_mismatch("network input", self.input_dim(), x.len()));
        }
        if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::NegativeInput { index, value });
        }
        Ok(())
    }

    /// `T(x)` for `x` in the nonnegative cone.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.eval(x))
    }

    pub(crate) fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut v = DVector::from_column_slice(x);
        for layer in &self.layers {
            v = layer.apply(&v);
        }
        v.data.into()
    }

    pub fn forward_trace(&self, x: &[f64]) -> Result<ForwardTrace> {
        self.check_input(x)?;
        let mut outputs = vec![DVector::from_column_slice(x)];
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let y = layer.pre_activation(outputs.last().unwrap());
            outputs.push(layer.activate(&y));
            pre_activations.push(y);
        }
        Ok(ForwardTrace {
            pre_activations,
            outputs,
        })
    }

    /// Chain-rule Jacobian `D_n W_n ... D_1 W_1` at a strictly positive point,
    /// where `D_i` holds the activation derivatives at the layer-`i`
    /// pre-activations.
    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        if x.len() != self.input_dim() {
            return Err(dim_mismatch("jacobian point", self.input_dim(), x.len()));
        }
        if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NonPositiveInput { index, value });
        }
        let trace = self.forward_trace(x)?;
        let mut jac = DMatrix::<f64>::identity(self.input_dim(), self.input_dim());
        for (layer, y) in self.layers.iter().zip(&trace.pre_activations) {
            let mut dw = layer.weights.clone();
            for (i, mut row) in dw.row_iter_mut().enumerate() {
                row *= layer.activations[i].derivative(y[i]);
            }
            jac = dw * jac;
        }
        Ok(jac)
    }

    /// Layer weights multiplied out: `W_n ... W_1`.
    pub fn weight_product(&self) -> DMatrix<f64> {
        let mut prod = self.layers[0].weights.clone();
        for layer in &self.layers[1..] {
            prod = &layer.weights * prod;
        }
        prod
    }

    /// Canonical ResNet split of every (square) layer, if one exists.
    pub fn detect_resnet(&self) -> Result<Option<ResNetStructure>> {
        ResNetStructure::detect(self)
    }
}

impl ConeOperator for Network {
    fn input_dim(&self) -> usize {
        Network::input_dim(self)
    }

    fn output_dim(&self) -> usize {
        Network::output_dim(self)
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.eval(x)
    }
}

/// Decomposition `W_i = epsilon_i I + V_i` of every layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ResNetStructure {
    pub epsilons: Vec<f64>,
    pub residuals: Vec<DMatrix<f64>>,
    /// First layer admitting a split with an entrywise positive `V`; see
    /// [`ResNetStructure::detect`].
    pub positive_layer_index: Option<usize>,
}

impl ResNetStructure {
    /// Takes `epsilon_i` as the smallest diagonal entry of `W_i`, so that
    /// `V_i = W_i - epsilon_i I` is nonnegative with a zero on its diagonal.
    /// Returns `None` if some diagonal entry is not positive.
    ///
    /// The maximal split never has an entrywise positive `V_i`. A layer is
    /// reported as `positive_layer_index` when every off-diagonal entry of
    /// `W_i` exceeds [`EPS_POS`]: then `epsilon_i / 2` leaves a positive
    /// remainder, see [`ResNetStructure::positive_split`].
    pub fn detect(net: &Network) -> Result<Option<Self>> {
        let mut epsilons = Vec::with_capacity(net.layers.len());
        let mut residuals = Vec::with_capacity(net.layers.len());
        let mut positive_layer_index = None;
        for (i, layer) in net.layers.iter().enumerate() {
            let w = &layer.weights;
            if !w.is_square() {
                return Err(Error::NonSquare {
                    rows: w.nrows(),
                    cols: w.ncols(),
                });
            }
            let eps = w.diagonal().min();
            if !(eps > 0.0) {
                return Ok(None);
            }
            let n = w.nrows();
            let v = w - DMatrix::<f64>::identity(n, n) * eps;
            let off_diag_positive = (0..n).all(|r| (0..n).all(|c| r == c || w[(r, c)] > EPS_POS));
            if positive_layer_index.is_none() && off_diag_positive {
                positive_layer_index = Some(i);
            }
            epsilons.push(eps);
            residuals.push(v);
        }
        Ok(Some(Self {
            epsilons,
            residuals,
            positive_layer_index,
        }))
    }

    /// A split of layer `i` with half the maximal identity weight.
    pub fn positive_split(&self, i: usize) -> (f64, DMatrix<f64>) {
        let eps = self.epsilons[i] / 2.0;
        let n = self.residuals[i].nrows();
        (eps, &self.residuals[i] + DMatrix::<f64>::identity(n, n) * eps)
    }

    /// `epsilon_i I + V_i`.
    pub fn reconstruct(&self, i: usize) -> DMatrix<f64> {
        let n = self.residuals[i].nrows();
        &self.residuals[i] + DMatrix::<f64>::identity(n, n) * self.epsilons[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind::*;

    fn relu_layer(rows: &[Vec<f64>], bias: &[f64]) -> Layer {
        Layer::from_rows(rows, bias, Relu).unwrap()
    }

    #[test]
    fn identity_relu_network() {
        let net = Network::new(vec![relu_layer(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[0.0, 0.0])]).unwrap();
        assert_eq!(net.forward(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn zero_weight_sigmoid_outputs_half() {
        let layer = Layer::uniform(DMatrix::zeros(3, 2), DVector::zeros(3), Sigmoid).unwrap();
        let net = Network::new(vec![layer]).unwrap();
        assert_eq!(net.forward(&[4.0, 9.0]).unwrap(), vec![0.5; 3]);
    }

    #[test]
    fn two_relu_layers_compose_affinely() {
        let w1 = vec![vec![1.0, 2.0], vec![0.5, 0.0], vec![0.0, 3.0]];
        let b1 = [0.1, 0.2, 0.3];
        let w2 = vec![vec![1.0, 1.0, 0.0], vec![0.0, 2.0, 0.5]];
        let b2 = [1.0, 0.0];
        let net = Network::new(vec![relu_layer(&w1, &b1), relu_layer(&w2, &b2)]).unwrap();
        let x = [3.0, 4.0];
        // hand-composed: W2 (W1 x + b1) + b2
        let h: Vec<f64> = (0..3).map(|i| w1[i][0] * x[0] + w1[i][1] * x[1] + b1[i]).collect();
        let expect: Vec<f64> = (0..2)
            .map(|j| (0..3).map(|i| w2[j][i] * h[i]).sum::<f64>() + b2[j])
            .collect();
        let got = net.forward(&x).unwrap();
        for (g, e) in got.iter().zip(&expect) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs_and_parameters() {
        let net = Network::new(vec![relu_layer(&[vec![1.0]], &[0.0])]).unwrap();
        assert!(matches!(net.forward(&[-1.0]), Err(Error::NegativeInput { .. })));
        assert!(matches!(net.forward(&[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(
            Layer::from_rows(&[vec![-0.5]], &[0.0], Relu),
            Err(Error::NegativeParameter { .. })
        ));
        assert!(matches!(
            Layer::from_rows(&[vec![0.5]], &[-1.0], Relu),
            Err(Error::NegativeParameter { .. })
        ));
        let a = relu_layer(&[vec![1.0, 1.0]], &[0.0]);
        assert!(matches!(
            Network::new(vec![a.clone(), a]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            Layer::new(DMatrix::zeros(1, 1), DVector::zeros(1), vec![CappedRelu { beta: 0.0 }]),
            Err(Error::InvalidActivation { .. })
        ));
    }

    #[test]
    fn jacobian_of_linear_regime_is_weight_product() {
        let w1 = vec![vec![1.0, 2.0], vec![0.5, 1.0]];
        let w2 = vec![vec![2.0, 0.0], vec![1.0, 3.0]];
        let net = Network::new(vec![relu_layer(&w1, &[0.0, 0.0]), relu_layer(&w2, &[0.0, 0.0])]).unwrap();
        let j = net.jacobian(&[1.0, 1.0]).unwrap();
        assert!((j - net.weight_product()).abs().max() < 1e-15);
    }

    #[test]
    fn sigmoid_jacobian_matches_finite_differences() {
        let layer = Layer::from_rows(&[vec![0.3, 1.2], vec![0.7, 0.1]], &[0.2, 0.0], Sigmoid).unwrap();
        let net = Network::new(vec![layer]).unwrap();
        let x = [0.8, 1.5];
        let j = net.jacobian(&x).unwrap();
        let h = 1e-6;
        for c in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[c] += h;
            xm[c] -= h;
            let fp = net.forward(&xp).unwrap();
            let fm = net.forward(&xm).unwrap();
            for r in 0..2 {
                assert!((j[(r, c)] - (fp[r] - fm[r]) / (2.0 * h)).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn zero_weights_give_zero_jacobian() {
        let layer = Layer::uniform(DMatrix::zeros(2, 2), DVector::from_element(2, 1.0), Tanh).unwrap();
        let net = Network::new(vec![layer]).unwrap();
        assert_eq!(net.jacobian(&[1.0, 1.0]).unwrap(), DMatrix::zeros(2, 2));
        assert!(matches!(net.jacobian(&[0.0, 1.0]), Err(Error::NonPositiveInput { .. })));
    }

    #[test]
    fn resnet_split_is_maximal_and_reconstructs() {
        let w = DMatrix::<f64>::identity(3, 3) * 2.0 + DMatrix::from_element(3, 3, 1.0);
        let net = Network::new(vec![Layer::uniform(w.clone(), DVector::zeros(3), Tanh).unwrap()]).unwrap();
        let rs = net.detect_resnet().unwrap().unwrap();
        assert_eq!(rs.epsilons, vec![3.0]);
        assert_eq!(rs.reconstruct(0), w);
        assert_eq!(rs.residuals[0].diagonal().min(), 0.0);
        assert!(rs.residuals[0].iter().all(|&v| v >= 0.0));
        // off-diagonal entries are positive, so a positive split exists
        assert_eq!(rs.positive_layer_index, Some(0));
        let (eps, v) = rs.positive_split(0);
        assert!(eps > 0.0 && v.iter().all(|&x| x > 0.0));
        assert_eq!(v + DMatrix::<f64>::identity(3, 3) * eps, w);
    }

    #[test]
    fn resnet_identity_and_zero_diagonal() {
        let id = Network::new(vec![
            Layer::uniform(DMatrix::identity(2, 2), DVector::zeros(2), Relu).unwrap()
        ])
        .unwrap();
        let rs = id.detect_resnet().unwrap().unwrap();
        assert_eq!(rs.epsilons, vec![1.0]);
        assert_eq!(rs.residuals[0], DMatrix::zeros(2, 2));
        assert_eq!(rs.positive_layer_index, None);

        let w = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 1.0]);
        let net = Network::new(vec![Layer::uniform(w, DVector::zeros(2), Relu).unwrap()]).unwrap();
        assert_eq!(net.detect_resnet().unwrap(), None);

        let rect = Network::new(vec![
            Layer::uniform(DMatrix::zeros(1, 2), DVector::zeros(1), Relu).unwrap()
        ])
        .unwrap();
        assert!(matches!(rect.detect_resnet(), Err(Error::NonSquare { .. })));
    }
}
