//! Tabular galaxy-morphology classification.
//!
//! Two classifiers over the Galaxy Zoo numeric feature table: an exact
//! k-nearest-neighbors model with a grid search over `k`, and a three-layer
//! perceptron trained by backpropagation with cross-validated randomized
//! search. Labels come from the spiral/elliptical/uncertain flags
//! (0/1/2). Every stochastic step is driven by an explicit seed.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod knn;
pub mod matrix;
pub mod mlp;
pub mod rng;
pub mod search;

pub use dataset::{ClassLabel, Dataset, Schema, SplitSpec, StandardizationStats};
pub use error::{Error, Result};
pub use eval::{ComparisonReport, EvalReport, ImportanceReport};
pub use knn::{GridSearchSpec, KnnModel};
pub use matrix::Matrix;
pub use mlp::{Architecture, MlpModel, TrainConfig, TrainHistory};
pub use search::SearchResult;

/// Version stamped into every JSON document this crate writes.
pub const FORMAT_VERSION: u32 = 1;
