//! Exact k-nearest-neighbors classification.
//!
//! The model is a lazy learner: fitting stores the (standardized) training
//! table and every query scans it in full. Neighbor order is ascending
//! distance with ties going to the lower training index; vote ties go to the
//! lower class index. [`NeighborGraph`] precomputes the `k_max` nearest rows
//! once so a whole grid of `k` values can be scored from prefixes, and it
//! yields exactly what the scan yields.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{self, ClassLabel, Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::eval;
use crate::matrix::Matrix;
use crate::search::{select_best, CandidateScore, Direction, SearchResult};
use crate::FORMAT_VERSION;

pub const DEFAULT_K: usize = 5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Euclidean,
}

#[inline]
fn distance_unchecked(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(distance_unchecked(a, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

/// Most frequent label; ties resolve to the smallest class index.
pub fn majority_vote(labels: &[ClassLabel]) -> Result<ClassLabel> {
    if labels.is_empty() {
        return Err(Error::EmptyInput("majority vote over no labels".into()));
    }
    let mut counts = [0usize; 256];
    for l in labels {
        counts[l.index()] += 1;
    }
    let mut best = 0;
    for (class, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = class;
        }
    }
    Ok(ClassLabel(best as u8))
}

/// Fitted neighbor store.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    features: Matrix,
    labels: Vec<ClassLabel>,
    k: usize,
    metric: Metric,
    num_classes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnSummary {
    pub format_version: u32,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub metric: Metric,
}

impl KnnModel {
    pub fn fit(train: &Dataset, k: usize) -> Result<Self> {
        if k == 0 || k > train.len() {
            return Err(Error::InvalidParameter(format!(
                "k must lie in 1..={}, got {k}",
                train.len()
            )));
        }
        Ok(Self {
            features: train.features().clone(),
            labels: train.labels().to_vec(),
            k,
            metric: Metric::Euclidean,
            num_classes: train.num_classes(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn labels(&self) -> &[ClassLabel] {
        &self.labels
    }

    pub fn summary(&self) -> KnnSummary {
        KnnSummary {
            format_version: FORMAT_VERSION,
            n: self.len(),
            d: self.dim(),
            k: self.k,
            metric: self.metric,
        }
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: d,
            });
        }
        Ok(())
    }

    /// The `k` closest training rows, skipping `exclude` if given.
    fn nearest(&self, query: &[f64], k: usize, exclude: Option<usize>) -> Vec<Neighbor> {
        let mut all: Vec<(f64, usize)> = self
            .features
            .iter_rows()
            .enumerate()
            .filter(|(i, _)| Some(*i) != exclude)
            .map(|(i, row)| (distance_unchecked(query, row), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        let k = k.min(all.len());
        if k < all.len() && k > 0 {
            all.select_nth_unstable_by(k - 1, cmp);
            all.truncate(k);
        }
        all.sort_unstable_by(cmp);
        all.truncate(k);
        all.into_iter()
            .map(|(distance, index)| Neighbor { index, distance })
            .collect()
    }

    pub fn kneighbors(&self, query: &[f64], k: usize) -> Result<Vec<Neighbor>> {
        self.check_dim(query.len())?;
        if k == 0 || k > self.len() {
            return Err(Error::InvalidParameter(format!(
                "k must lie in 1..={}, got {k}",
                self.len()
            )));
        }
        Ok(self.nearest(query, k, None))
    }

    fn vote(&self, neighbors: &[Neighbor]) -> ClassLabel {
        let labels: Vec<ClassLabel> = neighbors.iter().map(|n| self.labels[n.index]).collect();
        majority_vote(&labels).expect("k >= 1 guarantees a non-empty neighbor list")
    }

    pub fn predict_one(&self, query: &[f64]) -> Result<ClassLabel> {
        Ok(self.vote(&self.kneighbors(query, self.k)?))
    }

    /// Predicts every row of `queries`; rows are processed in parallel, output keeps row order.
    pub fn predict(&self, queries: &Matrix) -> Result<Vec<ClassLabel>> {
        if queries.rows() == 0 {
            return Ok(Vec::new());
        }
        self.check_dim(queries.cols())?;
        Ok((0..queries.rows())
            .into_par_iter()
            .map(|i| self.vote(&self.nearest(queries.row(i), self.k, None)))
            .collect())
    }
}

/// For each query, its `k_max` nearest training rows in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    k_max: usize,
    rows: Vec<Vec<Neighbor>>,
}

impl NeighborGraph {
    pub fn build(model: &KnnModel, queries: &Matrix, k_max: usize) -> Result<Self> {
        if queries.rows() > 0 {
            model.check_dim(queries.cols())?;
        }
        if k_max == 0 || k_max > model.len() {
            return Err(Error::InvalidParameter(format!(
                "k_max must lie in 1..={}, got {k_max}",
                model.len()
            )));
        }
        let rows = (0..queries.rows())
            .into_par_iter()
            .map(|i| model.nearest(queries.row(i), k_max, None))
            .collect();
        Ok(Self { k_max, rows })
    }

    /// Graph of the training set against itself; row `i` never contains `i`.
    pub fn build_self(model: &KnnModel, k_max: usize) -> Result<Self> {
        if k_max == 0 || k_max >= model.len() {
            return Err(Error::InvalidParameter(format!(
                "k_max must lie in 1..{}, got {k_max}",
                model.len()
            )));
        }
        let rows = (0..model.len())
            .into_par_iter()
            .map(|i| model.nearest(model.features.row(i), k_max, Some(i)))
            .collect();
        Ok(Self { k_max, rows })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn rows(&self) -> &[Vec<Neighbor>] {
        &self.rows
    }

    /// Predictions for every query using the first `k` neighbors of each row.
    pub fn predict(&self, model: &KnnModel, k: usize) -> Result<Vec<ClassLabel>> {
        if k == 0 || k > self.k_max {
            return Err(Error::InvalidParameter(format!(
                "k must lie in 1..={}, got {k}",
                self.k_max
            )));
        }
        Ok(self.rows.iter().map(|row| model.vote(&row[..k])).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Validation {
    /// Re-split the training data: `train_fraction` is kept for fitting, the rest scores each k.
    Holdout {
        train_fraction: f64,
        seed: u64,
    },
    Explicit(Dataset),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchSpec {
    pub k_values: Vec<usize>,
    pub validation: Validation,
}

impl Default for GridSearchSpec {
    fn default() -> Self {
        Self {
            k_values: (1..=30).collect(),
            validation: Validation::Holdout {
                train_fraction: 0.75,
                seed: 17,
            },
        }
    }
}

/// Scores every k on the validation data. Ties go to the smaller k; k larger
/// than the fitting partition is skipped and flagged.
pub fn grid_search_k(train: &Dataset, spec: &GridSearchSpec) -> Result<SearchResult<usize>> {
    if spec.k_values.is_empty() {
        return Err(Error::InvalidParameter("empty k grid".into()));
    }
    if let Some(bad) = spec.k_values.iter().find(|k| **k == 0) {
        return Err(Error::InvalidParameter(format!(
            "k must be >= 1, got {bad}"
        )));
    }
    let (fit_part, val) = match &spec.validation {
        Validation::Holdout {
            train_fraction,
            seed,
        } => dataset::split(train, &SplitSpec::new(*train_fraction, *seed))?,
        Validation::Explicit(val) => (train.clone(), val.clone()),
    };
    if fit_part.is_empty() || val.is_empty() {
        return Err(Error::EmptyInput(
            "grid search needs non-empty fit and validation partitions".into(),
        ));
    }

    let n_fit = fit_part.len();
    let k_max = spec
        .k_values
        .iter()
        .copied()
        .filter(|k| *k <= n_fit)
        .max()
        .ok_or_else(|| {
            Error::InvalidParameter(format!("every k exceeds the {n_fit} fitting rows"))
        })?;
    let model = KnnModel::fit(&fit_part, k_max)?;
    let graph = NeighborGraph::build(&model, val.features(), k_max)?;

    let mut candidates = Vec::with_capacity(spec.k_values.len());
    let mut warnings = Vec::new();
    for &k in &spec.k_values {
        if k > n_fit {
            warnings.push(format!("k={k} skipped: exceeds {n_fit} fitting rows"));
            candidates.push(CandidateScore {
                params: k,
                score: None,
                skipped: Some(format!("k exceeds {n_fit} fitting rows")),
            });
            continue;
        }
        let predicted = graph.predict(&model, k)?;
        candidates.push(CandidateScore {
            params: k,
            score: Some(eval::accuracy(&predicted, val.labels())?),
            skipped: None,
        });
    }
    let best = select_best(&candidates, Direction::Maximize, |a, b| a <= b)
        .expect("at least one k is within range");
    Ok(SearchResult {
        metric: "accuracy".into(),
        direction: Direction::Maximize,
        candidates,
        best,
        fold_runs: Vec::new(),
        warnings,
    })
}
