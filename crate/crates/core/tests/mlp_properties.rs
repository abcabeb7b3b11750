use galaxy_core::dataset::{self, ClassLabel, Dataset};
use galaxy_core::eval;
use galaxy_core::mlp::{
    self, Activation, Architecture, MlpParams, OptimizerKind, OptimizerState, RandomSearchSpec,
    SearchSpace, TrainConfig,
};
use galaxy_core::Matrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn blobs(n: usize, seed: u64) -> Dataset {
    let centers = dataset::default_class_centers(10, 1.0).unwrap();
    let raw = dataset::generate_synthetic(n, &centers, 1.0, seed).unwrap();
    dataset::standardize(&raw).unwrap().0
}

/// Scalar-loop reference: mean over rows of −Σ y·ln(max(p, ε)).
fn reference_cross_entropy(p: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for r in 0..p.len() {
        for c in 0..p[r].len() {
            if y[r][c] != 0.0 {
                total -= y[r][c] * p[r][c].max(1e-12).ln();
            }
        }
    }
    total / p.len() as f64
}

#[test]
fn cross_entropy_matches_scalar_reference() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let mut p_rows = Vec::new();
    let mut y_rows = Vec::new();
    for _ in 0..25 {
        let raw: Vec<f64> = (0..3).map(|_| rng.random_range(0.01..1.0)).collect();
        let s: f64 = raw.iter().sum();
        p_rows.push(raw.iter().map(|v| v / s).collect::<Vec<_>>());
        let mut y = vec![0.0; 3];
        y[rng.random_range(0..3)] = 1.0;
        y_rows.push(y);
    }
    let p = Matrix::from_rows(&p_rows, 3).unwrap();
    let y = Matrix::from_rows(&y_rows, 3).unwrap();
    let got = mlp::cross_entropy_loss(&p, &y).unwrap();
    assert!((got - reference_cross_entropy(&p_rows, &y_rows)).abs() < 1e-10);
}

#[test]
fn l2_penalty_matches_scalar_loop() {
    let arch = Architecture::three_layer(10, [7, 5], 3);
    let params = MlpParams::init(&arch, 8).unwrap();
    let mut sum = 0.0;
    for layer in &params.layers {
        for i in 0..layer.weights.rows() {
            for j in 0..layer.weights.cols() {
                sum += layer.weights[(i, j)] * layer.weights[(i, j)];
            }
        }
    }
    for lambda in [0.01, 0.5, 3.0] {
        let got = mlp::l2_penalty(&params, lambda);
        assert!((got - lambda / 2.0 * sum).abs() < 1e-12);
    }
}

#[test]
fn full_batch_sgd_decreases_objective() {
    let data = blobs(64, 12);
    let arch = Architecture::three_layer(10, [16, 16], 3);
    let y = mlp::one_hot(data.labels(), 3).unwrap();
    let config = TrainConfig {
        optimizer: OptimizerKind::Sgd,
        learning_rate: 1e-3,
        ..TrainConfig::default()
    };
    let mut params = MlpParams::init(&arch, 1).unwrap();
    let mut state = OptimizerState::new(OptimizerKind::Sgd, &params);
    let j0 = mlp::batch_objective(&params, Activation::Relu, data.features(), &y, 0.0).unwrap();
    for _ in 0..200 {
        let cache = mlp::forward(&params, Activation::Relu, data.features()).unwrap();
        let g = mlp::backward(&params, Activation::Relu, &cache, &y, 0.0).unwrap();
        mlp::optimizer_step(&mut params, &g, &mut state, &config);
    }
    let j200 = mlp::batch_objective(&params, Activation::Relu, data.features(), &y, 0.0).unwrap();
    assert!(j200 < j0, "{j200} !< {j0}");
}

#[test]
fn separable_blobs_train_to_high_accuracy() {
    let data = blobs(600, 2);
    let arch = Architecture::three_layer(10, [64, 64], 3);
    let (model, history) = mlp::train(&data, &arch, &TrainConfig::default()).unwrap();
    assert_eq!(history.loss.len(), 50);
    assert!(
        history.final_accuracy() >= 0.95,
        "{}",
        history.final_accuracy()
    );
    assert!(history.final_loss() < history.initial_loss);
    let pred = model.predict(data.features()).unwrap();
    assert_eq!(
        eval::accuracy(&pred, data.labels()).unwrap(),
        history.final_accuracy()
    );
}

#[test]
fn search_prefers_strong_configuration() {
    let data = blobs(240, 6);
    let spec = RandomSearchSpec {
        draws: 2,
        folds: 3,
        space: SearchSpace {
            hidden_widths: vec![1, 32],
            activations: vec![Activation::Relu],
            optimizers: vec![OptimizerKind::Adam],
        },
        base: TrainConfig {
            epochs: 15,
            learning_rate: 1e-2,
            ..TrainConfig::default()
        },
        ..RandomSearchSpec::default()
    };
    let result = mlp::randomized_search(&data, &spec).unwrap();
    assert_eq!(result.best_params().hidden_width, 32);
    assert_eq!(result.fold_runs.len(), 6);
    let again = mlp::randomized_search(&data, &spec).unwrap();
    assert_eq!(result, again);
}

#[test]
fn compat_four_class_training_runs() {
    let mut data = blobs(90, 9);
    let labels: Vec<ClassLabel> = data
        .labels()
        .iter()
        .enumerate()
        .map(|(i, l)| if i % 10 == 0 { ClassLabel(3) } else { *l })
        .collect();
    data = Dataset::new(
        data.ids().to_vec(),
        data.features().clone(),
        labels,
        data.feature_names().to_vec(),
        4,
    )
    .unwrap();
    let arch = Architecture::three_layer(10, [8, 8], 4);
    let cfg = TrainConfig {
        epochs: 2,
        ..TrainConfig::default()
    };
    let (model, _) = mlp::train(&data, &arch, &cfg).unwrap();
    assert!(model
        .predict(data.features())
        .unwrap()
        .iter()
        .all(|l| l.index() < 4));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn softmax_is_a_shift_invariant_distribution(
        v in prop::collection::vec(-50f64..50.0, 1..8),
        c in -100f64..100.0,
    ) {
        let p = mlp::softmax(&v);
        prop_assert!(p.iter().all(|x| *x > 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        for (a, b) in p.iter().zip(mlp::softmax(&shifted)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn one_hot_inverts_argmax(labels in prop::collection::vec(0u8..4, 1..20)) {
        let labels: Vec<ClassLabel> = labels.into_iter().map(ClassLabel).collect();
        let m = mlp::one_hot(&labels, 4).unwrap();
        for (row, l) in m.iter_rows().zip(&labels) {
            prop_assert_eq!(mlp::argmax(row), l.index());
            prop_assert_eq!(row.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn penalty_is_monotone_in_lambda(seed in 0u64..500, l1 in 0f64..5.0, dl in 0f64..5.0) {
        let arch = Architecture::three_layer(4, [3, 3], 3);
        let params = MlpParams::init(&arch, seed).unwrap();
        let s1 = mlp::l2_penalty(&params, l1);
        let s2 = mlp::l2_penalty(&params, l1 + dl);
        prop_assert!(s2 >= s1);
        prop_assert!(mlp::objective(1.0, s1) >= 1.0);
    }
}
