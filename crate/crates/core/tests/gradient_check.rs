//! Backpropagation checked against central finite differences of J.

use galaxy_core::dataset::ClassLabel;
use galaxy_core::mlp::{self, Activation, Architecture, MlpParams};
use galaxy_core::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

const STEP: f64 = 1e-7;
const REL_TOL: f64 = 1e-4;
const NEAR_ZERO: f64 = 1e-6;

fn numeric_gradient(
    params: &MlpParams,
    activation: Activation,
    x: &Matrix,
    y: &Matrix,
    lambda: f64,
) -> Vec<f64> {
    let n = params.num_params();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut plus = params.clone();
        let mut minus = params.clone();
        *plus.values_mut().nth(i).unwrap() += STEP;
        *minus.values_mut().nth(i).unwrap() -= STEP;
        let jp = mlp::batch_objective(&plus, activation, x, y, lambda).unwrap();
        let jm = mlp::batch_objective(&minus, activation, x, y, lambda).unwrap();
        out.push((jp - jm) / (2.0 * STEP));
    }
    out
}

/// Returns the worst relative error among entries that are not near zero.
fn check(analytic: &[f64], numeric: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, (a, n)) in analytic.iter().zip(numeric).enumerate() {
        let scale = a.abs().max(n.abs());
        if scale < NEAR_ZERO {
            assert!((a - n).abs() <= NEAR_ZERO, "entry {i}: {a} vs {n}");
            continue;
        }
        let rel = (a - n).abs() / scale;
        assert!(
            rel <= REL_TOL,
            "entry {i}: analytic {a} numeric {n} rel {rel}"
        );
        worst = worst.max(rel);
    }
    worst
}

fn random_case(seed: u64, arch: &Architecture, batch: usize) -> (MlpParams, Matrix, Matrix) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut params = MlpParams::init(arch, seed).unwrap();
    for b in params.layers.iter_mut().flat_map(|l| l.bias.iter_mut()) {
        *b = rng.random_range(-0.5..0.5);
    }
    let x = Matrix::from_vec(
        batch,
        arch.input_dim,
        (0..batch * arch.input_dim)
            .map(|_| rng.random_range(-2.0..2.0))
            .collect(),
    )
    .unwrap();
    let labels: Vec<ClassLabel> = (0..batch)
        .map(|_| ClassLabel(rng.random_range(0..arch.output_dim as u8)))
        .collect();
    let y = mlp::one_hot(&labels, arch.output_dim).unwrap();
    (params, x, y)
}

#[test]
fn relu_network_gradients_match_finite_differences() {
    let arch = Architecture::three_layer(10, [8, 8], 3);
    for seed in 0..5 {
        for lambda in [0.0, 0.1] {
            let (params, x, y) = random_case(seed, &arch, 16);
            let cache = mlp::forward(&params, Activation::Relu, &x).unwrap();
            let grads = mlp::backward(&params, Activation::Relu, &cache, &y, lambda).unwrap();
            let analytic: Vec<f64> = grads.values().copied().collect();
            let numeric = numeric_gradient(&params, Activation::Relu, &x, &y, lambda);
            check(&analytic, &numeric);
        }
    }
}

#[test]
fn smooth_activations_match_finite_differences() {
    for activation in [Activation::Sigmoid, Activation::Tanh, Activation::Identity] {
        let arch = Architecture::three_layer(5, [6, 4], 4).with_activation(activation);
        let (params, x, y) = random_case(11, &arch, 7);
        let cache = mlp::forward(&params, activation, &x).unwrap();
        let grads = mlp::backward(&params, activation, &cache, &y, 0.05).unwrap();
        let analytic: Vec<f64> = grads.values().copied().collect();
        check(
            &analytic,
            &numeric_gradient(&params, activation, &x, &y, 0.05),
        );
    }
}
