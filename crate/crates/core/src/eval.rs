//! Model-agnostic evaluation: accuracy, confusion matrix, permutation
//! importance and the side-by-side comparison table.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::dataset::{ClassLabel, Dataset};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;
use crate::FORMAT_VERSION;

pub const DEFAULT_IMPORTANCE_REPEATS: usize = 5;

fn check_lengths(predicted: &[ClassLabel], actual: &[ClassLabel]) -> Result<()> {
    if predicted.len() != actual.len() {
        return Err(Error::DimensionMismatch {
            expected: actual.len(),
            actual: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::EmptyInput("no labels to evaluate".into()));
    }
    Ok(())
}

pub fn accuracy(predicted: &[ClassLabel], actual: &[ClassLabel]) -> Result<f64> {
    check_lengths(predicted, actual)?;
    let correct = predicted.iter().zip(actual).filter(|(p, a)| p == a).count();
    Ok(correct as f64 / actual.len() as f64)
}

/// `q×q` counts, rows indexed by the actual class and columns by the prediction.
pub fn confusion_matrix(
    predicted: &[ClassLabel],
    actual: &[ClassLabel],
    num_classes: usize,
) -> Result<Vec<Vec<u64>>> {
    if predicted.len() != actual.len() {
        return Err(Error::DimensionMismatch {
            expected: actual.len(),
            actual: predicted.len(),
        });
    }
    let mut m = vec![vec![0u64; num_classes]; num_classes];
    for (p, a) in predicted.iter().zip(actual) {
        for l in [p, a] {
            if l.index() >= num_classes {
                return Err(Error::LabelOutOfRange {
                    label: l.index(),
                    num_classes,
                });
            }
        }
        m[a.index()][p.index()] += 1;
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub confusion: Vec<Vec<u64>>,
    pub n_evaluated: usize,
}

impl EvalReport {
    pub fn new(
        predicted: &[ClassLabel],
        actual: &[ClassLabel],
        num_classes: usize,
    ) -> Result<Self> {
        let confusion = confusion_matrix(predicted, actual, num_classes)?;
        Ok(Self {
            accuracy: accuracy(predicted, actual)?,
            confusion,
            n_evaluated: actual.len(),
        })
    }

    /// Confusion matrix as a CSV grid with an `actual` label column.
    pub fn confusion_csv(&self) -> String {
        let q = self.confusion.len();
        let mut out = String::from("actual");
        for j in 0..q {
            out.push_str(&format!(",pred_{j}"));
        }
        out.push('\n');
        for (i, row) in self.confusion.iter().enumerate() {
            out.push_str(&i.to_string());
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub importance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub baseline_accuracy: f64,
    pub features: Vec<FeatureImportance>,
    pub repeats: usize,
    pub seed: u64,
}

/// Mean accuracy drop when each feature column is shuffled, over `repeats`
/// seed-derived shuffles per feature.
pub fn permutation_importance<F>(
    predict: F,
    test: &Dataset,
    repeats: usize,
    seed: u64,
) -> Result<ImportanceReport>
where
    F: Fn(&Matrix) -> Result<Vec<ClassLabel>>,
{
    if test.is_empty() {
        return Err(Error::EmptyInput(
            "permutation importance on empty data".into(),
        ));
    }
    if repeats == 0 {
        return Err(Error::InvalidParameter("repeats must be >= 1".into()));
    }
    let baseline = accuracy(&predict(test.features())?, test.labels())?;
    let mut features = Vec::with_capacity(test.dim());
    for (j, name) in test.feature_names().iter().enumerate() {
        let original = test.features().column(j);
        let mut total = 0.0;
        for r in 0..repeats {
            let mut column = original.clone();
            rng::shuffle(
                &mut rng::seeded(rng::derive_seed(seed, &[j as u64, r as u64])),
                &mut column,
            );
            let mut permuted = test.features().clone();
            permuted.set_column(j, &column);
            total += baseline - accuracy(&predict(&permuted)?, test.labels())?;
        }
        features.push(FeatureImportance {
            feature: name.clone(),
            importance: total / repeats as f64,
        });
    }
    Ok(ImportanceReport {
        baseline_accuracy: baseline,
        features,
        repeats,
        seed,
    })
}

/// One row of the comparison table: train, test and best-search accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub best_search_accuracy: Option<f64>,
    pub test: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub format_version: u32,
    pub models: Vec<ModelSummary>,
}

pub fn compare_models(reports: Vec<ModelSummary>) -> Result<ComparisonReport> {
    if reports.is_empty() {
        return Err(Error::EmptyInput("no model reports to compare".into()));
    }
    let mut seen = HashSet::new();
    for r in &reports {
        if !seen.insert(r.model.as_str()) {
            return Err(Error::DuplicateId(r.model.clone()));
        }
    }
    Ok(ComparisonReport {
        format_version: FORMAT_VERSION,
        models: reports,
    })
}
