//! The four subcommands. Each one reads a [`RunConfig`], writes its
//! artifacts under the output location and returns what it wrote.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use galaxy_core::dataset::{self, IngestReport, Schema, StandardizationStats};
use galaxy_core::eval::{self, EvalReport, ImportanceReport, ModelSummary};
use galaxy_core::knn::{self, KnnModel, KnnSummary};
use galaxy_core::mlp::{self, MlpDocument, MlpModel};
use galaxy_core::{ClassLabel, Dataset, Matrix, SearchResult, FORMAT_VERSION};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(galaxy_core::Error::from)?;
    text.push('\n');
    write_text(path, &text)
}

fn load(cfg: &RunConfig) -> Result<(Schema, Dataset, IngestReport)> {
    let schema = cfg.load_schema()?;
    let (data, report) = dataset::parse_csv(cfg.input_path()?, &schema, &cfg.parse_options())?;
    Ok((schema, data, report))
}

/// Writes `ingest_report.json` and `class_distribution.csv`.
pub fn ingest(cfg: &RunConfig) -> Result<IngestReport> {
    let (_, _, report) = load(cfg)?;
    ensure_dir(&cfg.out)?;
    write_json(&cfg.out.join("ingest_report.json"), &report)?;
    let mut csv = String::from("class,count\n");
    for (class, count) in report.class_counts.iter().enumerate() {
        writeln!(csv, "{class},{count}").unwrap();
    }
    write_text(&cfg.out.join("class_distribution.csv"), &csv)?;
    Ok(report)
}

/// Writes a synthetic table in the ingestion layout to `cfg.out` (a file path).
pub fn synth(cfg: &RunConfig) -> Result<PathBuf> {
    let schema = cfg.load_schema()?;
    let dim = schema.feature_columns.len();
    let centers = dataset::default_class_centers(dim, cfg.synth.spread)?;
    let data = dataset::generate_synthetic(cfg.synth.n, &centers, cfg.synth.spread, cfg.seed)?
        .with_feature_names(schema.feature_columns.clone())?;
    if let Some(parent) = cfg.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    let file = fs::File::create(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))?;
    dataset::write_csv_to(&data, &schema, std::io::BufWriter::new(file))?;
    Ok(cfg.out.clone())
}

/// Training and test tables after the split, standardized with training statistics.
pub struct Prepared {
    pub report: IngestReport,
    pub train: Dataset,
    pub test: Dataset,
    pub stats: Option<StandardizationStats>,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let (_, data, report) = load(cfg)?;
    let (train, test) = dataset::split(&data, &cfg.split_spec())?;
    if !cfg.standardize {
        return Ok(Prepared {
            report,
            train,
            test,
            stats: None,
        });
    }
    let (train, stats) = dataset::standardize(&train)?;
    let test = dataset::apply_standardization(&test, &stats)?;
    Ok(Prepared {
        report,
        train,
        test,
        stats: Some(stats),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEval {
    pub model: String,
    pub train_accuracy: f64,
    pub test: EvalReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_search_accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_train_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_train_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub importance: Option<ImportanceReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalDocument {
    pub format_version: u32,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub models: Vec<ModelEval>,
    pub warnings: Vec<String>,
}

impl EvalDocument {
    pub fn model(&self, name: &str) -> Option<&ModelEval> {
        self.models.iter().find(|m| m.model == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub feature_names: Vec<String>,
    pub num_classes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardization: Option<StandardizationStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knn: Option<KnnSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mlp: Option<MlpDocument>,
}

fn evaluate<F>(name: &str, predict: F, prepared: &Prepared, cfg: &RunConfig) -> Result<ModelEval>
where
    F: Fn(&Matrix) -> galaxy_core::Result<Vec<ClassLabel>>,
{
    let q = prepared.train.num_classes();
    let train_pred = predict(prepared.train.features())?;
    let test_pred = predict(prepared.test.features())?;
    let importance = if cfg.importance_repeats > 0 {
        Some(eval::permutation_importance(
            &predict,
            &prepared.test,
            cfg.importance_repeats,
            cfg.seed,
        )?)
    } else {
        None
    };
    Ok(ModelEval {
        model: name.to_string(),
        train_accuracy: eval::accuracy(&train_pred, prepared.train.labels())?,
        test: EvalReport::new(&test_pred, prepared.test.labels(), q)?,
        best_search_accuracy: None,
        best_k: None,
        initial_train_loss: None,
        final_train_loss: None,
        importance,
    })
}

/// Fits the selected models and writes `model.json`, `eval.json`,
/// `confusion.csv`, the per-model curves and, for `both`, `comparison.json`.
pub fn train(cfg: &RunConfig) -> Result<EvalDocument> {
    let prepared = prepare(cfg)?;
    ensure_dir(&cfg.out)?;
    let q = prepared.train.num_classes();
    let mut models = Vec::new();
    let mut model_doc = ModelDocument {
        format_version: FORMAT_VERSION,
        feature_names: prepared.train.feature_names().to_vec(),
        num_classes: q,
        standardization: prepared.stats.clone(),
        knn: None,
        mlp: None,
    };

    if cfg.model.knn() {
        let model = KnnModel::fit(&prepared.train, cfg.knn.k)?;
        let grid = knn::grid_search_k(&prepared.train, &cfg.grid_spec())?;
        let mut curve = String::from("k,accuracy\n");
        for (k, acc) in grid.curve() {
            writeln!(curve, "{k},{acc}").unwrap();
        }
        write_text(&cfg.out.join("knn_grid.csv"), &curve)?;
        let mut report = evaluate("knn", |m| model.predict(m), &prepared, cfg)?;
        report.best_search_accuracy = Some(grid.best_score());
        report.best_k = Some(*grid.best_params());
        model_doc.knn = Some(model.summary());
        models.push(report);
    }

    if cfg.model.mlp() {
        let arch = cfg.architecture(prepared.train.dim(), q);
        let (model, history) = mlp::train(&prepared.train, &arch, &cfg.train_config())?;
        write_text(&cfg.out.join("mlp_history.csv"), &history.to_csv())?;
        let mut report = evaluate("mlp", |m| model.predict(m), &prepared, cfg)?;
        report.initial_train_loss = Some(history.initial_loss);
        report.final_train_loss = Some(history.final_loss());
        model_doc.mlp = Some(MlpDocument::from(&model));
        models.push(report);
    }

    let mut confusion = String::from("model,actual");
    for j in 0..q {
        write!(confusion, ",pred_{j}").unwrap();
    }
    confusion.push('\n');
    let mut importance = String::from("model,feature,importance\n");
    for m in &models {
        for (i, row) in m.test.confusion.iter().enumerate() {
            write!(confusion, "{},{i}", m.model).unwrap();
            for v in row {
                write!(confusion, ",{v}").unwrap();
            }
            confusion.push('\n');
        }
        if let Some(imp) = &m.importance {
            for f in &imp.features {
                writeln!(importance, "{},{},{}", m.model, f.feature, f.importance).unwrap();
            }
        }
    }
    write_text(&cfg.out.join("confusion.csv"), &confusion)?;
    if cfg.importance_repeats > 0 {
        write_text(&cfg.out.join("importance.csv"), &importance)?;
    }
    write_json(&cfg.out.join("model.json"), &model_doc)?;

    let mut warnings = prepared.report.warnings.clone();
    if prepared.report.rows_rejected > 0 {
        warnings.push(format!(
            "{} input rows rejected during ingestion",
            prepared.report.rows_rejected
        ));
    }
    let doc = EvalDocument {
        format_version: FORMAT_VERSION,
        seed: cfg.seed,
        n_train: prepared.train.len(),
        n_test: prepared.test.len(),
        models,
        warnings,
    };
    write_json(&cfg.out.join("eval.json"), &doc)?;

    if doc.models.len() > 1 {
        let comparison = eval::compare_models(
            doc.models
                .iter()
                .map(|m| ModelSummary {
                    model: m.model.clone(),
                    train_accuracy: m.train_accuracy,
                    test_accuracy: m.test.accuracy,
                    best_search_accuracy: m.best_search_accuracy,
                    test: m.test.clone(),
                })
                .collect(),
        )?;
        write_json(&cfg.out.join("comparison.json"), &comparison)?;
    }
    Ok(doc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRow {
    pub model: String,
    pub candidate: String,
    pub score: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestEntry {
    pub model: String,
    pub metric: String,
    pub candidate: String,
    pub params: serde_json::Value,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestDocument {
    pub format_version: u32,
    pub best: Vec<BestEntry>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub rows: Vec<SearchRow>,
    pub fold_runs: usize,
    pub best: BestDocument,
}

fn push_rows<P: Serialize>(
    model: &str,
    result: &SearchResult<P>,
    label: impl Fn(&P) -> String,
    rows: &mut Vec<SearchRow>,
    best: &mut BestDocument,
) -> Result<()> {
    for c in &result.candidates {
        rows.push(SearchRow {
            model: model.into(),
            candidate: label(&c.params),
            score: c.score,
            status: c.skipped.clone().unwrap_or_else(|| "ok".into()),
        });
    }
    best.best.push(BestEntry {
        model: model.into(),
        metric: result.metric.clone(),
        candidate: label(result.best_params()),
        params: serde_json::to_value(result.best_params()).map_err(galaxy_core::Error::from)?,
        score: result.best_score(),
    });
    best.warnings
        .extend(result.warnings.iter().map(|w| format!("{model}: {w}")));
    Ok(())
}

/// Runs the KNN grid search and/or the MLP randomized search on the training
/// split; writes `search.csv`, `best.json` and, for the MLP, `search_runs.csv`.
pub fn search(cfg: &RunConfig) -> Result<SearchOutcome> {
    let prepared = prepare(cfg)?;
    ensure_dir(&cfg.out)?;
    let mut rows = Vec::new();
    let mut best = BestDocument {
        format_version: FORMAT_VERSION,
        best: Vec::new(),
        warnings: Vec::new(),
    };
    let mut runs_csv = String::from("model,candidate,fold,score\n");
    let mut fold_runs = 0;

    if cfg.model.knn() {
        let grid = knn::grid_search_k(&prepared.train, &cfg.grid_spec())?;
        push_rows("knn", &grid, |k| format!("k={k}"), &mut rows, &mut best)?;
    }
    if cfg.model.mlp() {
        let result = mlp::randomized_search(&prepared.train, &cfg.random_search_spec())?;
        for run in &result.fold_runs {
            let label = result.candidates[run.candidate].params.label();
            writeln!(runs_csv, "mlp,{label},{},{}", run.fold, run.score).unwrap();
        }
        fold_runs = result.fold_runs.len();
        push_rows("mlp", &result, |c| c.label(), &mut rows, &mut best)?;
        write_text(&cfg.out.join("search_runs.csv"), &runs_csv)?;
    }

    let mut csv = String::from("model,candidate,score,status\n");
    for r in &rows {
        let score = r.score.map(|s| s.to_string()).unwrap_or_default();
        writeln!(csv, "{},{},{},{}", r.model, r.candidate, score, r.status).unwrap();
    }
    write_text(&cfg.out.join("search.csv"), &csv)?;
    write_json(&cfg.out.join("best.json"), &best)?;
    Ok(SearchOutcome {
        rows,
        fold_runs,
        best,
    })
}

/// Reloads a trained network from `model.json`.
pub fn load_mlp(path: &Path) -> Result<MlpModel> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let doc: ModelDocument = serde_json::from_str(&text).map_err(galaxy_core::Error::from)?;
    let mlp = doc
        .mlp
        .ok_or_else(|| CliError::Config(format!("{} holds no MLP", path.display())))?;
    Ok(MlpModel::try_from(mlp)?)
}
