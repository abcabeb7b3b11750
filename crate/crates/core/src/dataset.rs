//! Tabular ingestion for Galaxy Zoo style classification tables.
//!
//! A CSV row carries an object id, a configurable set of numeric feature
//! columns and three morphology flags (spiral, elliptical, uncertain). The
//! flags are the label source and never appear among the features.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;
use crate::FORMAT_VERSION;

/// Morphology class: 0 spiral, 1 elliptical, 2 uncertain (3 only in fill-missing compat mode).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassLabel(pub u8);

impl ClassLabel {
    pub const SPIRAL: ClassLabel = ClassLabel(0);
    pub const ELLIPTICAL: ClassLabel = ClassLabel(1);
    pub const UNCERTAIN: ClassLabel = ClassLabel(2);
    /// Phantom class produced by the fill-with-3 compat behavior.
    pub const FILLED: ClassLabel = ClassLabel(3);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn name(self) -> &'static str {
        match self.0 {
            0 => "spiral",
            1 => "elliptical",
            2 => "uncertain",
            _ => "missing",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One parsed CSV row before label derivation. `values` follow the schema's feature order.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub object_id: i64,
    pub values: Vec<f64>,
    pub flag_spiral: bool,
    pub flag_elliptical: bool,
    pub flag_uncertain: bool,
}

/// Exactly one flag set selects that class; anything else is uncertain.
pub fn derive_label(record: &RawRecord) -> ClassLabel {
    derive_label_with(record, None)
}

/// Like [`derive_label`], but a record with no flag set maps to `fill` when given.
pub fn derive_label_with(record: &RawRecord, fill: Option<ClassLabel>) -> ClassLabel {
    let flags = [
        record.flag_spiral,
        record.flag_elliptical,
        record.flag_uncertain,
    ];
    match flags.iter().filter(|f| **f).count() {
        1 => ClassLabel(flags.iter().position(|f| *f).unwrap() as u8),
        0 => fill.unwrap_or(ClassLabel::UNCERTAIN),
        _ => ClassLabel::UNCERTAIN,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagColumns {
    pub spiral: String,
    pub elliptical: String,
    pub uncertain: String,
}

impl Default for FlagColumns {
    fn default() -> Self {
        Self {
            spiral: "spiral".into(),
            elliptical: "elliptical".into(),
            uncertain: "uncertain".into(),
        }
    }
}

const VOTE_COLUMNS: [&str; 9] = [
    "p_el",
    "p_cw",
    "p_acw",
    "p_edge",
    "p_dk",
    "p_mg",
    "p_cs",
    "p_el_debiased",
    "p_cs_debiased",
];

fn default_id_column() -> String {
    "objid".into()
}

fn default_feature_columns() -> Vec<String> {
    std::iter::once("spectra")
        .chain(VOTE_COLUMNS)
        .map(String::from)
        .collect()
}

fn default_unit_interval_columns() -> Vec<String> {
    VOTE_COLUMNS.iter().map(|s| s.to_string()).collect()
}

fn default_leakage_columns() -> Vec<String> {
    vec!["p_el_debiased".into(), "p_cs_debiased".into()]
}

/// Column mapping, loaded from the JSON schema configuration file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    #[serde(default = "default_id_column")]
    pub id_column: String,
    #[serde(default = "default_feature_columns")]
    pub feature_columns: Vec<String>,
    #[serde(default)]
    pub flag_columns: FlagColumns,
    /// Vote-fraction columns expected in [0, 1]; violations are counted, not rejected.
    #[serde(default = "default_unit_interval_columns")]
    pub unit_interval_columns: Vec<String>,
    /// Feature columns known to encode the flags (Galaxy Zoo flags are thresholded debiased votes).
    #[serde(default = "default_leakage_columns")]
    pub leakage_columns: Vec<String>,
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            id_column: default_id_column(),
            feature_columns: default_feature_columns(),
            flag_columns: FlagColumns::default(),
            unit_interval_columns: default_unit_interval_columns(),
            leakage_columns: default_leakage_columns(),
        }
    }
}

impl Schema {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let schema: Schema = serde_json::from_str(&text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_columns.is_empty() {
            return Err(Error::InvalidParameter(
                "schema lists no feature columns".into(),
            ));
        }
        let flags = [
            &self.flag_columns.spiral,
            &self.flag_columns.elliptical,
            &self.flag_columns.uncertain,
        ];
        for name in &self.feature_columns {
            if flags.iter().any(|f| f.eq_ignore_ascii_case(name)) {
                return Err(Error::InvalidParameter(format!(
                    "flag column `{name}` cannot also be a feature"
                )));
            }
        }
        Ok(())
    }

    /// Warnings for feature columns that deterministically encode the label.
    pub fn leakage_warnings(&self) -> Vec<String> {
        self.feature_columns
            .iter()
            .filter(|f| self.leakage_columns.iter().any(|l| l.eq_ignore_ascii_case(f)))
            .map(|f| {
                format!(
                    "label leakage: feature `{f}` is a label source (flags are thresholded from it); accuracy overstates model skill"
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseOptions {
    /// Class assigned to rows with no flag set; only 3 is accepted (adds a fourth class).
    pub fill_missing_label: Option<u8>,
}

impl ParseOptions {
    fn fill(&self) -> Result<Option<ClassLabel>> {
        match self.fill_missing_label {
            None => Ok(None),
            Some(3) => Ok(Some(ClassLabel::FILLED)),
            Some(v) => Err(Error::InvalidParameter(format!(
                "fill-missing-label must be 3, got {v}"
            ))),
        }
    }

    pub fn num_classes(&self) -> usize {
        if self.fill_missing_label.is_some() {
            4
        } else {
            3
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedRow {
    /// 1-based line number in the file (header is line 1).
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub format_version: u32,
    pub rows_read: usize,
    pub rows_rejected: usize,
    pub class_counts: Vec<usize>,
    pub rejected: Vec<RejectedRow>,
    /// Number of vote-fraction cells outside [0, 1].
    pub range_warnings: usize,
    pub warnings: Vec<String>,
}

/// Immutable feature table with derived labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    ids: Vec<i64>,
    features: Matrix,
    labels: Vec<ClassLabel>,
    feature_names: Vec<String>,
    num_classes: usize,
}

impl Dataset {
    pub fn new(
        ids: Vec<i64>,
        features: Matrix,
        labels: Vec<ClassLabel>,
        feature_names: Vec<String>,
        num_classes: usize,
    ) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.rows(),
                actual: labels.len(),
            });
        }
        if ids.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                actual: ids.len(),
            });
        }
        if feature_names.len() != features.cols() {
            return Err(Error::DimensionMismatch {
                expected: features.cols(),
                actual: feature_names.len(),
            });
        }
        if !features.is_finite() {
            return Err(Error::NonFinite("dataset features"));
        }
        if let Some(bad) = labels.iter().find(|l| l.index() >= num_classes) {
            return Err(Error::LabelOutOfRange {
                label: bad.index(),
                num_classes,
            });
        }
        Ok(Self {
            ids,
            features,
            labels,
            feature_names,
            num_classes,
        })
    }

    /// Dataset with sequential ids and generic feature names.
    pub fn from_parts(
        features: Matrix,
        labels: Vec<ClassLabel>,
        num_classes: usize,
    ) -> Result<Self> {
        let ids = (0..features.rows() as i64).collect();
        let names = (0..features.cols()).map(|j| format!("x{j}")).collect();
        Self::new(ids, features, labels, names, num_classes)
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

    pub fn ids(&self) -> &[i64] {
        &self.ids
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[ClassLabel] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            ids: indices.iter().map(|&i| self.ids[i]).collect(),
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            num_classes: self.num_classes,
        }
    }

    /// Same rows and labels with a replacement feature matrix of identical shape.
    pub fn with_features(&self, features: Matrix) -> Result<Dataset> {
        if features.rows() != self.features.rows() || features.cols() != self.features.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.features.cols(),
                actual: features.cols(),
            });
        }
        Dataset::new(
            self.ids.clone(),
            features,
            self.labels.clone(),
            self.feature_names.clone(),
            self.num_classes,
        )
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Dataset> {
        if names.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: names.len(),
            });
        }
        self.feature_names = names;
        Ok(self)
    }
}

fn parse_flag(cell: &str) -> std::result::Result<bool, String> {
    match cell.trim().to_ascii_lowercase().as_str() {
        "1" | "1.0" | "true" | "t" | "yes" | "y" => Ok(true),
        "0" | "0.0" | "false" | "f" | "no" | "n" | "" => Ok(false),
        other => Err(format!("unparseable flag value `{other}`")),
    }
}

fn parse_id(cell: &str) -> std::result::Result<i64, String> {
    let cell = cell.trim();
    cell.parse::<i64>()
        .map_err(|_| format!("unparseable object id `{cell}`"))
}

fn parse_real(cell: &str, column: &str) -> std::result::Result<f64, String> {
    let cell = cell.trim();
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(format!("non-finite value in `{column}`")),
        Err(_) => Err(format!("unparseable numeric `{cell}` in `{column}`")),
    }
}

struct ColumnMap {
    id: usize,
    features: Vec<usize>,
    flags: [usize; 3],
    unit_interval: Vec<bool>,
}

fn locate_columns(headers: &csv::StringRecord, schema: &Schema) -> Result<ColumnMap> {
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let id = find(&schema.id_column)?;
    let features = schema
        .feature_columns
        .iter()
        .map(|c| find(c))
        .collect::<Result<Vec<_>>>()?;
    let flags = [
        find(&schema.flag_columns.spiral)?,
        find(&schema.flag_columns.elliptical)?,
        find(&schema.flag_columns.uncertain)?,
    ];
    let unit_interval = schema
        .feature_columns
        .iter()
        .map(|c| {
            schema
                .unit_interval_columns
                .iter()
                .any(|u| u.eq_ignore_ascii_case(c))
        })
        .collect();
    Ok(ColumnMap {
        id,
        features,
        flags,
        unit_interval,
    })
}

fn parse_record(
    record: &csv::StringRecord,
    cols: &ColumnMap,
    schema: &Schema,
    width: usize,
) -> std::result::Result<RawRecord, String> {
    if record.len() != width {
        return Err(format!("expected {width} fields, found {}", record.len()));
    }
    let object_id = parse_id(&record[cols.id])?;
    let values = cols
        .features
        .iter()
        .zip(&schema.feature_columns)
        .map(|(&c, name)| parse_real(&record[c], name))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(RawRecord {
        object_id,
        values,
        flag_spiral: parse_flag(&record[cols.flags[0]])?,
        flag_elliptical: parse_flag(&record[cols.flags[1]])?,
        flag_uncertain: parse_flag(&record[cols.flags[2]])?,
    })
}

/// Parses a CSV table from any reader. Malformed rows are rejected and listed in the report.
pub fn parse_reader<R: Read>(
    reader: R,
    schema: &Schema,
    options: &ParseOptions,
) -> Result<(Dataset, IngestReport)> {
    schema.validate()?;
    let fill = options.fill()?;
    let num_classes = options.num_classes();

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() || headers.iter().all(|h| h.trim().is_empty()) {
        return Err(Error::EmptyInput("file has no header row".into()));
    }
    let cols = locate_columns(&headers, schema)?;
    let width = headers.len();

    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut seen = HashSet::new();
    let mut rejected = Vec::new();
    let mut range_warnings = 0;
    let mut rows_read = 0;

    for (i, result) in rdr.records().enumerate() {
        rows_read += 1;
        // header is line 1
        let line = result
            .as_ref()
            .ok()
            .and_then(|r| r.position().map(|p| p.line()))
            .unwrap_or(i as u64 + 2);
        let parsed = match result {
            Ok(record) => parse_record(&record, &cols, schema, width),
            Err(e) => Err(e.to_string()),
        };
        let raw = match parsed {
            Ok(raw) if !seen.insert(raw.object_id) => {
                rejected.push(RejectedRow {
                    line,
                    reason: format!("duplicate object id {}", raw.object_id),
                });
                continue;
            }
            Ok(raw) => raw,
            Err(reason) => {
                rejected.push(RejectedRow { line, reason });
                continue;
            }
        };
        range_warnings += raw
            .values
            .iter()
            .zip(&cols.unit_interval)
            .filter(|(v, bounded)| **bounded && !(0.0..=1.0).contains(*v))
            .count();
        labels.push(derive_label_with(&raw, fill));
        ids.push(raw.object_id);
        rows.push(raw.values);
    }

    if rows_read == 0 {
        return Err(Error::EmptyInput(
            "file contains a header but no data rows".into(),
        ));
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput(format!(
            "all {rows_read} data rows were rejected"
        )));
    }

    let features = Matrix::from_rows(&rows, schema.feature_columns.len())?;
    let dataset = Dataset::new(
        ids,
        features,
        labels,
        schema.feature_columns.clone(),
        num_classes,
    )?;
    let mut warnings = schema.leakage_warnings();
    if range_warnings > 0 {
        warnings.push(format!(
            "{range_warnings} vote-fraction values fall outside [0, 1]"
        ));
    }
    let report = IngestReport {
        format_version: FORMAT_VERSION,
        rows_read,
        rows_rejected: rejected.len(),
        class_counts: class_distribution(&dataset),
        rejected,
        range_warnings,
        warnings,
    };
    Ok((dataset, report))
}

pub fn parse_csv(
    path: impl AsRef<Path>,
    schema: &Schema,
    options: &ParseOptions,
) -> Result<(Dataset, IngestReport)> {
    let file = std::fs::File::open(path)?;
    parse_reader(std::io::BufReader::new(file), schema, options)
}

/// Writes `dataset` in the ingestion layout; flags are re-derived from the labels.
pub fn write_csv_to<W: Write>(dataset: &Dataset, schema: &Schema, writer: W) -> Result<()> {
    if schema.feature_columns.len() != dataset.dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.dim(),
            actual: schema.feature_columns.len(),
        });
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![schema.id_column.clone()];
    header.extend(schema.feature_columns.iter().cloned());
    header.push(schema.flag_columns.spiral.clone());
    header.push(schema.flag_columns.elliptical.clone());
    header.push(schema.flag_columns.uncertain.clone());
    w.write_record(&header)?;

    let mut fields = Vec::with_capacity(header.len());
    for i in 0..dataset.len() {
        fields.clear();
        fields.push(dataset.ids[i].to_string());
        fields.extend(dataset.features.row(i).iter().map(|v| v.to_string()));
        let label = dataset.labels[i].index();
        for class in 0..3 {
            fields.push(if label == class { "1" } else { "0" }.to_string());
        }
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(dataset: &Dataset, schema: &Schema, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv_to(dataset, schema, std::io::BufWriter::new(file))
}

/// Per-feature mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardizationStats {
    pub fn fit(features: &Matrix) -> Result<Self> {
        let n = features.rows();
        if n == 0 {
            return Err(Error::EmptyInput(
                "cannot standardize an empty dataset".into(),
            ));
        }
        let d = features.cols();
        let mut mean = vec![0.0; d];
        let mut std = vec![1.0; d];
        for j in 0..d {
            let col = features.column(j);
            if col.iter().all(|v| *v == col[0]) {
                // constant column: exact zeros after centering, std fixed at 1
                mean[j] = col[0];
                continue;
            }
            let m = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
            mean[j] = m;
            std[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, features: &Matrix) -> Result<Matrix> {
        if features.cols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: features.cols(),
            });
        }
        let mut out = features.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.std[j];
            }
        }
        Ok(out)
    }
}

pub fn standardize(dataset: &Dataset) -> Result<(Dataset, StandardizationStats)> {
    let stats = StandardizationStats::fit(&dataset.features)?;
    let out = apply_standardization(dataset, &stats)?;
    Ok((out, stats))
}

pub fn apply_standardization(dataset: &Dataset, stats: &StandardizationStats) -> Result<Dataset> {
    dataset.with_features(stats.transform(&dataset.features)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    #[serde(default = "SplitSpec::default_fraction")]
    pub train_fraction: f64,
    #[serde(default = "SplitSpec::default_seed")]
    pub seed: u64,
}

impl SplitSpec {
    fn default_fraction() -> f64 {
        0.7
    }

    fn default_seed() -> u64 {
        17
    }

    pub fn new(train_fraction: f64, seed: u64) -> Self {
        Self {
            train_fraction,
            seed,
        }
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self::new(Self::default_fraction(), Self::default_seed())
    }
}

/// Row indices of the (train, test) partition: shuffled by seed, first `round(n·f)` go to train.
pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "split needs at least 2 rows, got {n}"
        )));
    }
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction must lie in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    let n_train = (n as f64 * spec.train_fraction).round() as usize;
    let mut perm = rng::permutation(n, spec.seed);
    let test = perm.split_off(n_train);
    Ok((perm, test))
}

pub fn split(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(dataset.len(), spec)?;
    Ok((dataset.subset(&train), dataset.subset(&test)))
}

/// Class centers used by the synthetic generator when none are supplied:
/// every coordinate at 0.5, class `c` shifted by `5·spread` along axis `c`.
/// Pairwise center distance is `5·√2·spread ≈ 7.07·spread`.
pub fn default_class_centers(dim: usize, spread: f64) -> Result<Matrix> {
    if dim < 3 {
        return Err(Error::InvalidParameter(format!(
            "default centers need at least 3 features, got {dim}"
        )));
    }
    let mut centers = Matrix::from_vec(3, dim, vec![0.5; 3 * dim])?;
    for c in 0..3 {
        centers[(c, c)] += 5.0 * spread;
    }
    Ok(centers)
}

/// Gaussian blobs around the three class centers; sample `i` belongs to class `i mod 3`.
pub fn generate_synthetic(
    n: usize,
    class_centers: &Matrix,
    spread: f64,
    seed: u64,
) -> Result<Dataset> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "synthetic dataset needs at least 3 rows, got {n}"
        )));
    }
    if !(spread > 0.0 && spread.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "spread must be positive, got {spread}"
        )));
    }
    if class_centers.rows() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            actual: class_centers.rows(),
        });
    }
    let d = class_centers.cols();
    let mut rng = rng::seeded(seed);
    let mut features = Matrix::zeros(n, d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 3;
        let center = class_centers.row(class);
        for (v, c) in features.row_mut(i).iter_mut().zip(center) {
            let z: f64 = rng.sample(StandardNormal);
            *v = c + spread * z;
        }
        labels.push(ClassLabel(class as u8));
    }
    Dataset::from_parts(features, labels, 3)
}

pub fn class_distribution(dataset: &Dataset) -> Vec<usize> {
    let mut counts = vec![0; dataset.num_classes];
    for l in &dataset.labels {
        counts[l.index()] += 1;
    }
    counts
}
