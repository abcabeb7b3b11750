//! Shared result type for hyperparameter searches.

use serde::{Deserialize, Serialize};

/// Score for one candidate configuration. `score` is `None` when the candidate was skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore<P> {
    pub params: P,
    pub score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

/// Score of a single cross-validation fold for one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRun {
    pub candidate: usize,
    pub fold: usize,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult<P> {
    /// Name of the selection metric (`accuracy`, `mse`).
    pub metric: String,
    pub direction: Direction,
    pub candidates: Vec<CandidateScore<P>>,
    /// Index into `candidates` of the selected configuration.
    pub best: usize,
    #[serde(default)]
    pub fold_runs: Vec<FoldRun>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl<P> SearchResult<P> {
    pub fn best_candidate(&self) -> &CandidateScore<P> {
        &self.candidates[self.best]
    }

    pub fn best_params(&self) -> &P {
        &self.candidates[self.best].params
    }

    pub fn best_score(&self) -> f64 {
        self.candidates[self.best]
            .score
            .expect("best candidate always carries a score")
    }

    /// Evaluated (params, score) pairs in candidate order.
    pub fn curve(&self) -> impl Iterator<Item = (&P, f64)> {
        self.candidates
            .iter()
            .filter_map(|c| c.score.map(|s| (&c.params, s)))
    }
}

/// Index of the best scored candidate; `prefer(a, b)` breaks exact ties (true keeps `a`).
pub(crate) fn select_best<P>(
    candidates: &[CandidateScore<P>],
    direction: Direction,
    prefer: impl Fn(&P, &P) -> bool,
) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, c) in candidates.iter().enumerate() {
        let Some(score) = c.score else { continue };
        best = match best {
            None => Some(i),
            Some(b) => {
                let bs = candidates[b].score.unwrap();
                let better = match direction {
                    Direction::Maximize => score > bs,
                    Direction::Minimize => score < bs,
                };
                if better || (score == bs && !prefer(&candidates[b].params, &c.params)) {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}
