//! Dense feed-forward classifier: ReLU (or sigmoid/tanh) hidden layers, a
//! softmax output, categorical cross-entropy with an optional L2 term, and
//! hand-derived backpropagation.
//!
//! Every layer maps a batch `X` (rows are samples) to `Z = X·Wᵀ + b`, where
//! `W` is stored `out × in`. Hidden layers apply the activation; the last
//! layer emits raw logits.

mod backprop;
mod loss;
mod optim;
mod persist;
mod search;
mod train;

pub use backprop::{backward, Gradients};
pub use loss::{
    batch_objective, cross_entropy_loss, l2_penalty, mse, objective, one_hot, softmax,
    softmax_rows, LOG_FLOOR,
};
pub use optim::{optimizer_step, OptimizerKind, OptimizerState};
pub use persist::{LayerDocument, MlpDocument};
pub use search::{
    kfold_indices, randomized_search, MlpCandidate, RandomSearchSpec, SearchSpace, SelectionMetric,
};
pub use train::{train, train_with_validation, TrainConfig, TrainHistory};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dataset::ClassLabel;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    Sigmoid,
    Tanh,
    /// Pass-through; only useful for tests and linear baselines.
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// dφ/dz evaluated at the pre-activation `z`.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = self.apply(z);
                s * (1.0 - s)
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub output_dim: usize,
    #[serde(default)]
    pub hidden_activation: Activation,
}

impl Architecture {
    /// Input, two hidden layers of the given widths, softmax output.
    pub fn three_layer(input_dim: usize, hidden: [usize; 2], output_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dims: hidden.to_vec(),
            output_dim,
            hidden_activation: Activation::Relu,
        }
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.hidden_activation = activation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden_dims.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "all layer widths must be >= 1: {self:?}"
            )));
        }
        Ok(())
    }

    /// Two hidden layers plus the output layer.
    pub fn is_three_dense_layers(&self) -> bool {
        self.hidden_dims.len() == 2
    }

    /// (out, in) shape of each weight matrix.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut widths = vec![self.input_dim];
        widths.extend(&self.hidden_dims);
        widths.push(self.output_dim);
        widths.windows(2).map(|w| (w[1], w[0])).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// `out × in`
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(out: usize, inp: usize) -> Self {
        Self {
            weights: Matrix::zeros(out, inp),
            bias: vec![0.0; out],
        }
    }

    pub fn fan_out(&self) -> usize {
        self.weights.rows()
    }

    pub fn fan_in(&self) -> usize {
        self.weights.cols()
    }

    /// `X·Wᵀ + b` for a batch `X`.
    fn affine(&self, x: &Matrix) -> Matrix {
        let mut z = Matrix::zeros(x.rows(), self.fan_out());
        for r in 0..x.rows() {
            let xr = x.row(r);
            for (o, zo) in z.row_mut(r).iter_mut().enumerate() {
                let w = self.weights.row(o);
                *zo = self.bias[o] + w.iter().zip(xr).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        z
    }
}

/// Weights and biases of every layer, input side first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layers: Vec<Layer>,
}

impl MlpParams {
    pub fn zeros(arch: &Architecture) -> Self {
        Self {
            layers: arch
                .layer_shapes()
                .into_iter()
                .map(|(o, i)| Layer::zeros(o, i))
                .collect(),
        }
    }

    /// Scaled-uniform init: `W ~ U(−a, a)` with `a = √(6 / (fan_in + fan_out))`, zero biases.
    pub fn init(arch: &Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = rng::seeded(seed);
        let mut params = Self::zeros(arch);
        for layer in &mut params.layers {
            let limit = (6.0 / (layer.fan_in() + layer.fan_out()) as f64).sqrt();
            for w in layer.weights.as_mut_slice() {
                *w = rng.random_range(-limit..limit);
            }
        }
        Ok(params)
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.as_slice().len() + l.bias.len())
            .sum()
    }

    /// All parameters in a fixed order: per layer, weights (row-major) then bias.
    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.as_slice().iter().chain(l.bias.iter()))
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.as_mut_slice().iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(|v| v.is_finite())
    }

    pub fn matches(&self, arch: &Architecture) -> bool {
        let shapes = arch.layer_shapes();
        shapes.len() == self.layers.len()
            && shapes.iter().zip(&self.layers).all(|(&(o, i), l)| {
                l.weights.rows() == o && l.weights.cols() == i && l.bias.len() == o
            })
    }
}

/// Intermediates of one forward pass, kept for backpropagation.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    pub input: Matrix,
    /// Pre-activations `z` of every hidden layer.
    pub pre_activations: Vec<Matrix>,
    /// Activations `h = φ(z)` of every hidden layer.
    pub activations: Vec<Matrix>,
    /// Output-layer logits `o`.
    pub logits: Matrix,
}

impl ForwardCache {
    /// Input of layer `l` (the batch for `l = 0`).
    pub fn layer_input(&self, l: usize) -> &Matrix {
        if l == 0 {
            &self.input
        } else {
            &self.activations[l - 1]
        }
    }
}

pub fn forward(params: &MlpParams, activation: Activation, x: &Matrix) -> Result<ForwardCache> {
    let first = params
        .layers
        .first()
        .ok_or_else(|| Error::InvalidParameter("network has no layers".into()))?;
    if x.cols() != first.fan_in() {
        return Err(Error::DimensionMismatch {
            expected: first.fan_in(),
            actual: x.cols(),
        });
    }
    if !x.is_finite() {
        return Err(Error::NonFinite("network input"));
    }
    let (hidden, output) = params.layers.split_at(params.layers.len() - 1);
    let mut pre_activations = Vec::with_capacity(hidden.len());
    let mut activations: Vec<Matrix> = Vec::with_capacity(hidden.len());
    for layer in hidden {
        let input = activations.last().unwrap_or(x);
        let z = layer.affine(input);
        let mut h = z.clone();
        for v in h.as_mut_slice() {
            *v = activation.apply(*v);
        }
        pre_activations.push(z);
        activations.push(h);
    }
    let logits = output[0].affine(activations.last().unwrap_or(x));
    if !logits.is_finite() {
        return Err(Error::NonFinite("output logits"));
    }
    Ok(ForwardCache {
        input: x.clone(),
        pre_activations,
        activations,
        logits,
    })
}

/// Index of the largest entry; ties resolve to the smallest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// A trained network.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub architecture: Architecture,
    pub params: MlpParams,
    pub optimizer: OptimizerKind,
    pub seed: u64,
}

impl MlpModel {
    pub fn forward(&self, x: &Matrix) -> Result<ForwardCache> {
        forward(&self.params, self.architecture.hidden_activation, x)
    }

    pub fn predict_proba(&self, queries: &Matrix) -> Result<Matrix> {
        Ok(softmax_rows(&self.forward(queries)?.logits))
    }

    /// Class with the highest softmax probability per row.
    pub fn predict(&self, queries: &Matrix) -> Result<Vec<ClassLabel>> {
        if queries.rows() == 0 {
            return Ok(Vec::new());
        }
        let probs = self.predict_proba(queries)?;
        Ok(probs
            .iter_rows()
            .map(|p| ClassLabel(argmax(p) as u8))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn activations() {
        assert_eq!(Activation::Relu.apply(-1.0), 0.0);
        assert_eq!(Activation::Relu.apply(2.0), 2.0);
        assert_eq!(Activation::Sigmoid.apply(0.0), 0.5);
        assert_eq!(Activation::Tanh.apply(0.0), 0.0);
        assert_eq!(Activation::Relu.derivative(-0.5), 0.0);
        assert_eq!(Activation::Sigmoid.derivative(0.0), 0.25);
    }

    #[test]
    fn zero_network_gives_uniform_softmax() {
        let arch = Architecture::three_layer(10, [8, 8], 3);
        let params = MlpParams::zeros(&arch);
        let x = Matrix::from_vec(2, 10, (0..20).map(|v| v as f64).collect()).unwrap();
        let cache = forward(&params, Activation::Relu, &x).unwrap();
        assert!(cache.logits.as_slice().iter().all(|v| *v == 0.0));
        let p = softmax_rows(&cache.logits);
        assert!(p.as_slice().iter().all(|v| (*v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn identity_network_reproduces_input() {
        let d = 4;
        let arch = Architecture::three_layer(d, [d, d], d).with_activation(Activation::Identity);
        let mut params = MlpParams::zeros(&arch);
        for layer in &mut params.layers {
            layer.weights = Matrix::identity(d);
        }
        let x = Matrix::from_vec(2, d, vec![1.0, -2.0, 3.5, 0.0, 9.0, 8.0, -7.0, 0.25]).unwrap();
        let cache = forward(&params, Activation::Identity, &x).unwrap();
        assert_eq!(cache.logits, x);
    }

    #[test]
    fn forward_rejects_shape_and_nan() {
        let arch = Architecture::three_layer(3, [2, 2], 3);
        let params = MlpParams::zeros(&arch);
        assert!(forward(&params, Activation::Relu, &Matrix::zeros(1, 4)).is_err());
        let nan = Matrix::from_vec(1, 3, vec![f64::NAN, 0.0, 0.0]).unwrap();
        assert!(matches!(
            forward(&params, Activation::Relu, &nan),
            Err(Error::NonFinite(_))
        ));
        let mut huge = MlpParams::zeros(&arch);
        huge.layers[2].bias[0] = f64::INFINITY;
        assert!(matches!(
            forward(&huge, Activation::Relu, &Matrix::zeros(1, 3)),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn zero_model_predicts_class_zero_and_bias_shift_is_harmless() {
        let arch = Architecture::three_layer(3, [4, 4], 3);
        let mut model = MlpModel {
            params: MlpParams::zeros(&arch),
            architecture: arch.clone(),
            optimizer: OptimizerKind::Adam,
            seed: 0,
        };
        let x = Matrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, -1.0, 0.0, 4.0]).unwrap();
        assert_eq!(model.predict(&x).unwrap(), vec![ClassLabel(0); 2]);

        model.params = MlpParams::init(&arch, 3).unwrap();
        let before = model.predict(&x).unwrap();
        for b in &mut model.params.layers[2].bias {
            *b += 2.5;
        }
        assert_eq!(model.predict(&x).unwrap(), before);
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let arch = Architecture::three_layer(10, [64, 64], 3);
        let a = MlpParams::init(&arch, 17).unwrap();
        assert_eq!(a, MlpParams::init(&arch, 17).unwrap());
        assert_ne!(a, MlpParams::init(&arch, 18).unwrap());
        assert!(a.matches(&arch));
        let limit = (6.0f64 / 74.0).sqrt();
        assert!(a.layers[0]
            .weights
            .as_slice()
            .iter()
            .all(|w| w.abs() <= limit));
        assert_eq!(a.num_params(), 10 * 64 + 64 + 64 * 64 + 64 + 64 * 3 + 3);
    }

    #[test]
    fn argmax_ties_take_first() {
        assert_eq!(argmax(&[0.2, 0.5, 0.5]), 1);
        assert_eq!(argmax(&[1.0, 1.0, 1.0]), 0);
    }
}
