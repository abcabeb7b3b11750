use crate::dataset::ClassLabel;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

use super::{forward, Activation, MlpParams};

/// Lower bound applied to probabilities inside the logarithm.
pub const LOG_FLOOR: f64 = 1e-12;

pub fn one_hot(labels: &[ClassLabel], num_classes: usize) -> Result<Matrix> {
    let mut m = Matrix::zeros(labels.len(), num_classes);
    for (i, l) in labels.iter().enumerate() {
        if l.index() >= num_classes {
            return Err(Error::LabelOutOfRange {
                label: l.index(),
                num_classes,
            });
        }
        m[(i, l.index())] = 1.0;
    }
    Ok(m)
}

/// Max-shifted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    out
}

pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for i in 0..out.rows() {
        let p = softmax(logits.row(i));
        out.row_mut(i).copy_from_slice(&p);
    }
    out
}

fn check_same_shape(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.rows() != b.rows() {
        return Err(Error::DimensionMismatch {
            expected: b.rows(),
            actual: a.rows(),
        });
    }
    if a.cols() != b.cols() {
        return Err(Error::DimensionMismatch {
            expected: b.cols(),
            actual: a.cols(),
        });
    }
    Ok(())
}

/// Mean over rows of `−Σ y·ln(max(p, 1e−12))`.
pub fn cross_entropy_loss(probabilities: &Matrix, targets: &Matrix) -> Result<f64> {
    check_same_shape(probabilities, targets)?;
    if probabilities.rows() == 0 {
        return Err(Error::EmptyInput(
            "cross-entropy over an empty batch".into(),
        ));
    }
    let total: f64 = probabilities
        .as_slice()
        .iter()
        .zip(targets.as_slice())
        .filter(|(_, y)| **y != 0.0)
        .map(|(p, y)| -y * p.max(LOG_FLOOR).ln())
        .sum();
    Ok(total / probabilities.rows() as f64)
}

/// Mean squared error between probabilities and one-hot targets, averaged over every entry.
pub fn mse(probabilities: &Matrix, targets: &Matrix) -> Result<f64> {
    check_same_shape(probabilities, targets)?;
    let n = probabilities.as_slice().len();
    if n == 0 {
        return Err(Error::EmptyInput("mse over an empty batch".into()));
    }
    let total: f64 = probabilities
        .as_slice()
        .iter()
        .zip(targets.as_slice())
        .map(|(p, y)| (p - y) * (p - y))
        .sum();
    Ok(total / n as f64)
}

/// `λ/2` times the squared Frobenius norms of all weight matrices; biases excluded.
pub fn l2_penalty(params: &MlpParams, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    lambda / 2.0
        * params
            .layers
            .iter()
            .map(|l| l.weights.frobenius_sq())
            .sum::<f64>()
}

/// Regularized objective `J = L + s`.
#[inline]
pub fn objective(loss: f64, penalty: f64) -> f64 {
    loss + penalty
}

/// J of a batch under the given parameters.
pub fn batch_objective(
    params: &MlpParams,
    activation: Activation,
    x: &Matrix,
    targets: &Matrix,
    lambda: f64,
) -> Result<f64> {
    let cache = forward(params, activation, x)?;
    let loss = cross_entropy_loss(&softmax_rows(&cache.logits), targets)?;
    Ok(objective(loss, l2_penalty(params, lambda)))
}
