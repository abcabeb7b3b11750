//! Run configuration: a JSON file plus command-line overrides.
//!
//! Every field has a default, so an empty `{}` (or no file) is a valid
//! configuration once an input path is supplied. Relative paths resolve
//! against the working directory.

use std::path::{Path, PathBuf};

use galaxy_core::dataset::{ParseOptions, Schema, SplitSpec};
use galaxy_core::knn::{GridSearchSpec, Validation};
use galaxy_core::mlp::{
    Activation, Architecture, RandomSearchSpec, SearchSpace, SelectionMetric, TrainConfig,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModelSelector {
    Knn,
    Mlp,
    #[default]
    Both,
}

impl ModelSelector {
    pub fn knn(self) -> bool {
        matches!(self, ModelSelector::Knn | ModelSelector::Both)
    }

    pub fn mlp(self) -> bool {
        matches!(self, ModelSelector::Mlp | ModelSelector::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnSection {
    pub k: usize,
    /// k values scored by the grid search.
    pub grid: Vec<usize>,
    /// Share of the training split used for fitting during the grid search.
    pub validation_train_fraction: f64,
}

impl Default for KnnSection {
    fn default() -> Self {
        Self {
            k: galaxy_core::knn::DEFAULT_K,
            grid: (1..=30).collect(),
            validation_train_fraction: 0.75,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpSection {
    pub hidden_dims: Vec<usize>,
    pub activation: Activation,
    pub train: TrainConfig,
}

impl Default for MlpSection {
    fn default() -> Self {
        Self {
            hidden_dims: vec![64, 64],
            activation: Activation::Relu,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSection {
    pub draws: usize,
    pub folds: usize,
    pub space: SearchSpace,
}

impl Default for SearchSection {
    fn default() -> Self {
        Self {
            draws: 4,
            folds: 3,
            space: SearchSpace::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSection {
    pub n: usize,
    pub spread: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            n: 6000,
            spread: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    /// Column-mapping JSON; the built-in Galaxy Zoo mapping when absent.
    pub schema: Option<PathBuf>,
    pub model: ModelSelector,
    /// Seeds the split, the KNN holdout, MLP training, search and importance shuffles.
    pub seed: u64,
    pub train_fraction: f64,
    pub standardize: bool,
    pub knn: KnnSection,
    pub mlp: MlpSection,
    pub search: SearchSection,
    /// Permutation-importance repeats; 0 disables the importance report.
    pub importance_repeats: usize,
    pub fill_missing_label: Option<u8>,
    pub mse_selection: bool,
    pub synth: SynthSection,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            schema: None,
            model: ModelSelector::Both,
            seed: 17,
            train_fraction: 0.7,
            standardize: true,
            knn: KnnSection::default(),
            mlp: MlpSection::default(),
            search: SearchSection::default(),
            importance_repeats: galaxy_core::eval::DEFAULT_IMPORTANCE_REPEATS,
            fill_missing_label: None,
            mse_selection: false,
            synth: SynthSection::default(),
            out: PathBuf::from("out"),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// JSON run configuration
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input CSV
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Column-mapping JSON (feature_columns, flag_columns, id_column)
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Output directory (for `synth`, the CSV file to write)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelSelector>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Neighbors for the fitted KNN model
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Map rows with no morphology flag to this class (only 3 is accepted)
    #[arg(long)]
    pub fill_missing_label: Option<u8>,
    /// Select MLP search candidates by MSE on one-hot targets instead of accuracy
    #[arg(long)]
    pub mse_selection: bool,
    /// Synthetic row count
    #[arg(long)]
    pub n: Option<usize>,
    /// Synthetic blob standard deviation
    #[arg(long)]
    pub spread: Option<f64>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// File values (if any) with the overrides applied on top.
    pub fn resolve(overrides: &Overrides) -> Result<Self> {
        let mut cfg = match &overrides.config {
            Some(path) => Self::from_file(path)?,
            None => Self::default(),
        };
        if let Some(v) = &overrides.input {
            cfg.input = Some(v.clone());
        }
        if let Some(v) = &overrides.schema {
            cfg.schema = Some(v.clone());
        }
        if let Some(v) = &overrides.out {
            cfg.out = v.clone();
        }
        if let Some(v) = overrides.model {
            cfg.model = v;
        }
        if let Some(v) = overrides.seed {
            cfg.seed = v;
        }
        if let Some(v) = overrides.k {
            cfg.knn.k = v;
        }
        if let Some(v) = overrides.epochs {
            cfg.mlp.train.epochs = v;
        }
        if overrides.fill_missing_label.is_some() {
            cfg.fill_missing_label = overrides.fill_missing_label;
        }
        if overrides.mse_selection {
            cfg.mse_selection = true;
        }
        if let Some(v) = overrides.n {
            cfg.synth.n = v;
        }
        if let Some(v) = overrides.spread {
            cfg.synth.spread = v;
        }
        Ok(cfg)
    }

    pub fn input_path(&self) -> Result<&Path> {
        self.input
            .as_deref()
            .ok_or_else(|| CliError::Config("no input file (set `input` or pass --input)".into()))
    }

    pub fn load_schema(&self) -> Result<Schema> {
        match &self.schema {
            Some(path) => Ok(Schema::from_json_file(path)?),
            None => Ok(Schema::default()),
        }
    }

    pub fn parse_options(&self) -> ParseOptions {
        ParseOptions {
            fill_missing_label: self.fill_missing_label,
        }
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec::new(self.train_fraction, self.seed)
    }

    pub fn grid_spec(&self) -> GridSearchSpec {
        GridSearchSpec {
            k_values: self.knn.grid.clone(),
            validation: Validation::Holdout {
                train_fraction: self.knn.validation_train_fraction,
                seed: self.seed,
            },
        }
    }

    pub fn architecture(&self, input_dim: usize, output_dim: usize) -> Architecture {
        Architecture {
            input_dim,
            hidden_dims: self.mlp.hidden_dims.clone(),
            output_dim,
            hidden_activation: self.mlp.activation,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.mlp.train
        }
    }

    pub fn random_search_spec(&self) -> RandomSearchSpec {
        RandomSearchSpec {
            draws: self.search.draws,
            folds: self.search.folds,
            space: self.search.space.clone(),
            selection_metric: if self.mse_selection {
                SelectionMetric::Mse
            } else {
                SelectionMetric::Accuracy
            },
            seed: self.seed,
            base: self.train_config(),
        }
    }
}
