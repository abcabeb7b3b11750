use crate::error::{Error, Result};
use crate::matrix::Matrix;

use super::{softmax_rows, Activation, ForwardCache, MlpParams};

/// Gradients share the parameter layout.
pub type Gradients = MlpParams;

/// Analytic gradient of `J = mean cross-entropy + λ/2·Σ‖W‖²_F`.
///
/// Softmax and cross-entropy are differentiated together, so the gradient at
/// the logits is `(p − y) / batch`. Each layer then propagates
/// `∂J/∂W = δᵀ·input`, `∂J/∂b = Σ_rows δ`, and `δ_prev = (δ·W) ⊙ φ'(z_prev)`.
pub fn backward(
    params: &MlpParams,
    activation: Activation,
    cache: &ForwardCache,
    targets: &Matrix,
    lambda: f64,
) -> Result<Gradients> {
    let n_layers = params.layers.len();
    if cache.pre_activations.len() + 1 != n_layers || cache.activations.len() + 1 != n_layers {
        return Err(Error::DimensionMismatch {
            expected: n_layers - 1,
            actual: cache.pre_activations.len(),
        });
    }
    let batch = cache.logits.rows();
    if targets.rows() != batch || targets.cols() != cache.logits.cols() {
        return Err(Error::DimensionMismatch {
            expected: cache.logits.cols(),
            actual: targets.cols(),
        });
    }
    if batch == 0 {
        return Err(Error::EmptyInput(
            "backward pass over an empty batch".into(),
        ));
    }

    let mut delta = softmax_rows(&cache.logits);
    let scale = 1.0 / batch as f64;
    for (d, y) in delta.as_mut_slice().iter_mut().zip(targets.as_slice()) {
        *d = (*d - y) * scale;
    }

    let mut grads = params.clone();
    for l in (0..n_layers).rev() {
        let layer = &params.layers[l];
        let input = cache.layer_input(l);
        if input.cols() != layer.fan_in() || delta.cols() != layer.fan_out() {
            return Err(Error::DimensionMismatch {
                expected: layer.fan_in(),
                actual: input.cols(),
            });
        }
        let g = &mut grads.layers[l];
        for (gw, w) in g
            .weights
            .as_mut_slice()
            .iter_mut()
            .zip(layer.weights.as_slice())
        {
            *gw = lambda * w;
        }
        g.bias.iter_mut().for_each(|b| *b = 0.0);
        for r in 0..batch {
            let dr = delta.row(r);
            let xr = input.row(r);
            for (o, &d) in dr.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.bias[o] += d;
                for (gw, x) in g.weights.row_mut(o).iter_mut().zip(xr) {
                    *gw += d * x;
                }
            }
        }

        if l > 0 {
            let z = &cache.pre_activations[l - 1];
            let mut prev = Matrix::zeros(batch, layer.fan_in());
            for r in 0..batch {
                let dr = delta.row(r);
                let pr = prev.row_mut(r);
                for (o, &d) in dr.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    for (p, w) in pr.iter_mut().zip(layer.weights.row(o)) {
                        *p += d * w;
                    }
                }
                for (p, zv) in pr.iter_mut().zip(z.row(r)) {
                    *p *= activation.derivative(*zv);
                }
            }
            delta = prev;
        }
    }
    Ok(grads)
}
