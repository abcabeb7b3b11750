//! Randomized hyperparameter search scored by k-fold cross-validation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::eval;
use crate::rng;
use crate::search::{select_best, CandidateScore, Direction, FoldRun, SearchResult};

use super::{mse, one_hot, train, Activation, Architecture, OptimizerKind, TrainConfig};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMetric {
    /// Mean fold accuracy, maximized.
    #[default]
    Accuracy,
    /// Mean squared error of softmax outputs against one-hot targets, minimized.
    Mse,
}

impl SelectionMetric {
    pub fn name(self) -> &'static str {
        match self {
            SelectionMetric::Accuracy => "accuracy",
            SelectionMetric::Mse => "mse",
        }
    }

    fn direction(self) -> Direction {
        match self {
            SelectionMetric::Accuracy => Direction::Maximize,
            SelectionMetric::Mse => Direction::Minimize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    /// Width used for both hidden layers.
    pub hidden_widths: Vec<usize>,
    pub activations: Vec<Activation>,
    pub optimizers: Vec<OptimizerKind>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            hidden_widths: vec![16, 32, 64],
            activations: vec![Activation::Relu, Activation::Tanh, Activation::Sigmoid],
            optimizers: vec![OptimizerKind::Adam, OptimizerKind::Sgd],
        }
    }
}

impl SearchSpace {
    pub fn size(&self) -> usize {
        self.hidden_widths.len() * self.activations.len() * self.optimizers.len()
    }

    /// Every combination, widths outermost.
    pub fn enumerate(&self) -> Vec<MlpCandidate> {
        let mut out = Vec::with_capacity(self.size());
        for &hidden_width in &self.hidden_widths {
            for &activation in &self.activations {
                for &optimizer in &self.optimizers {
                    out.push(MlpCandidate {
                        hidden_width,
                        activation,
                        optimizer,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MlpCandidate {
    pub hidden_width: usize,
    pub activation: Activation,
    pub optimizer: OptimizerKind,
}

impl MlpCandidate {
    pub fn architecture(&self, input_dim: usize, output_dim: usize) -> Architecture {
        Architecture::three_layer(input_dim, [self.hidden_width; 2], output_dim)
            .with_activation(self.activation)
    }

    pub fn label(&self) -> String {
        format!(
            "hidden={};activation={};optimizer={}",
            self.hidden_width,
            self.activation.name(),
            self.optimizer.name()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomSearchSpec {
    pub draws: usize,
    pub folds: usize,
    pub space: SearchSpace,
    pub selection_metric: SelectionMetric,
    pub seed: u64,
    /// Training settings shared by every candidate; the optimizer and seed are overridden.
    pub base: TrainConfig,
}

impl Default for RandomSearchSpec {
    fn default() -> Self {
        Self {
            draws: 4,
            folds: 3,
            space: SearchSpace::default(),
            selection_metric: SelectionMetric::Accuracy,
            seed: 17,
            base: TrainConfig::default(),
        }
    }
}

/// Validation folds: a seeded shuffle of `0..n` cut into `folds` nearly equal parts.
pub fn kfold_indices(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::InvalidParameter(format!(
            "folds must be >= 2, got {folds}"
        )));
    }
    if n < folds {
        return Err(Error::InvalidParameter(format!(
            "{n} rows cannot fill {folds} folds"
        )));
    }
    let perm = rng::permutation(n, seed);
    let base = n / folds;
    let extra = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let len = base + usize::from(f < extra);
        out.push(perm[start..start + len].to_vec());
        start += len;
    }
    Ok(out)
}

fn score_fold(
    data: &Dataset,
    folds: &[Vec<usize>],
    fold: usize,
    candidate: &MlpCandidate,
    spec: &RandomSearchSpec,
    seed: u64,
) -> Result<f64> {
    let train_idx: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|(f, _)| *f != fold)
        .flat_map(|(_, idx)| idx.iter().copied())
        .collect();
    let fit = data.subset(&train_idx);
    let val = data.subset(&folds[fold]);
    let arch = candidate.architecture(data.dim(), data.num_classes());
    let config = TrainConfig {
        optimizer: candidate.optimizer,
        seed,
        ..spec.base
    };
    let (model, _) = train(&fit, &arch, &config)?;
    match spec.selection_metric {
        SelectionMetric::Accuracy => eval::accuracy(&model.predict(val.features())?, val.labels()),
        SelectionMetric::Mse => mse(
            &model.predict_proba(val.features())?,
            &one_hot(val.labels(), data.num_classes())?,
        ),
    }
}

/// Draws candidates without replacement from the space and scores each by
/// k-fold cross-validation. Fold runs are independent and seeded from
/// `(spec.seed, candidate, fold)`, so they run in parallel yet reproduce exactly.
pub fn randomized_search(
    data: &Dataset,
    spec: &RandomSearchSpec,
) -> Result<SearchResult<MlpCandidate>> {
    if spec.draws == 0 {
        return Err(Error::InvalidParameter("draws must be >= 1".into()));
    }
    let mut pool = spec.space.enumerate();
    if pool.is_empty() {
        return Err(Error::InvalidParameter("empty search space".into()));
    }
    let mut warnings = Vec::new();
    if spec.draws > pool.len() {
        warnings.push(format!(
            "{} draws requested but the space has {} distinct configurations; deduplicated",
            spec.draws,
            pool.len()
        ));
    }
    rng::shuffle(
        &mut rng::seeded(rng::derive_seed(spec.seed, &[u64::MAX])),
        &mut pool,
    );
    pool.truncate(spec.draws);

    let folds = kfold_indices(data.len(), spec.folds, spec.seed)?;
    let jobs: Vec<(usize, usize)> = (0..pool.len())
        .flat_map(|c| (0..spec.folds).map(move |f| (c, f)))
        .collect();
    let scores = jobs
        .par_iter()
        .map(|&(c, f)| {
            let seed = rng::derive_seed(spec.seed, &[c as u64, f as u64]);
            score_fold(data, &folds, f, &pool[c], spec, seed)
        })
        .collect::<Result<Vec<f64>>>()?;

    let fold_runs: Vec<FoldRun> = jobs
        .iter()
        .zip(&scores)
        .map(|(&(candidate, fold), &score)| FoldRun {
            candidate,
            fold,
            score,
        })
        .collect();
    let candidates: Vec<CandidateScore<MlpCandidate>> = pool
        .iter()
        .enumerate()
        .map(|(c, params)| {
            let mean = scores[c * spec.folds..(c + 1) * spec.folds]
                .iter()
                .sum::<f64>()
                / spec.folds as f64;
            CandidateScore {
                params: *params,
                score: Some(mean),
                skipped: None,
            }
        })
        .collect();
    let direction = spec.selection_metric.direction();
    // ties keep the earlier draw
    let best = select_best(&candidates, direction, |_, _| true).expect("draws >= 1");
    Ok(SearchResult {
        metric: spec.selection_metric.name().into(),
        direction,
        candidates,
        best,
        fold_runs,
        warnings,
    })
}
