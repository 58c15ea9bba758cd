//! Binary-labeled tabular datasets: CSV ingestion, z-score standardization,
//! the synthetic imbalanced generator, and the majority/minority split.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::linalg::Matrix;
use crate::seed::stage_rng;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("cannot parse value {value:?} at data row {row}, column `{column}`")]
    Parse {
        /// 1-based data row (the header is not counted).
        row: usize,
        column: String,
        value: String,
    },
    #[error("dataset has no data rows")]
    EmptyDataset,
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("only one class present ({present} samples, all labeled {label})")]
    SingleClass { label: u8, present: usize },
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Where a dataset came from. Synthetic datasets keep their ground-truth
/// cluster assignment so tests can check what the miner should find.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    File(String),
    Synthetic {
        spec_digest: String,
        /// `Some(c)` for minority rows drawn from sub-cluster `c`.
        clusters: Vec<Option<usize>>,
    },
    Derived(String),
}

impl Provenance {
    pub fn tag(&self) -> String {
        match self {
            Provenance::File(p) => format!("file:{p}"),
            Provenance::Synthetic { spec_digest, .. } => format!("synthetic:{spec_digest}"),
            Provenance::Derived(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<u8>,
    feature_names: Vec<String>,
    source: Provenance,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        labels: Vec<u8>,
        feature_names: Vec<String>,
        source: Provenance,
    ) -> Result<Self, DataError> {
        let (n, d) = features.shape();
        if n == 0 {
            return Err(DataError::EmptyDataset);
        }
        if d == 0 {
            return Err(DataError::Invalid("no feature columns".into()));
        }
        if labels.len() != n {
            return Err(DataError::Invalid(format!(
                "{} labels for {n} rows",
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(DataError::Invalid(format!("label {bad} is not 0 or 1")));
        }
        if feature_names.len() != d {
            return Err(DataError::Invalid(format!(
                "{} names for {d} columns",
                feature_names.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(DataError::Invalid(format!("duplicate feature name `{name}`")));
            }
        }
        if let Some(pos) = features.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(DataError::Parse {
                row: pos / d + 1,
                column: feature_names[pos % d].clone(),
                value: features.as_slice()[pos].to_string(),
            });
        }
        Ok(Self {
            features,
            labels,
            feature_names,
            source,
        })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn source(&self) -> &Provenance {
        &self.source
    }

    pub fn n_samples(&self) -> usize {
        self.features.rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn n_minority(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    /// Same labels and names, new feature values.
    pub fn with_features(&self, features: Matrix, source: Provenance) -> Result<Self, DataError> {
        Dataset::new(features, self.labels.clone(), self.feature_names.clone(), source)
    }

    /// SHA-256 over shape, names, raw feature bits and labels.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n_samples() as u64).to_le_bytes());
        h.update((self.n_features() as u64).to_le_bytes());
        for name in &self.feature_names {
            h.update((name.len() as u64).to_le_bytes());
            h.update(name.as_bytes());
        }
        for v in self.features.as_slice() {
            h.update(v.to_bits().to_le_bytes());
        }
        h.update(&self.labels);
        hex::encode(h.finalize())
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_f64(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &str,
    drop_columns: &[String],
) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let file = File::open(path)?;
    read_csv(file, label_column, drop_columns, Provenance::File(path.display().to_string()))
}

pub fn read_csv<R: std::io::Read>(
    reader: R,
    label_column: &str,
    drop_columns: &[String],
    source: Provenance,
) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();

    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| DataError::MissingColumn(label_column.to_string()))?;
    for dropped in drop_columns {
        if !header.contains(dropped) {
            return Err(DataError::MissingColumn(dropped.clone()));
        }
    }
    let feature_idx: Vec<usize> = (0..header.len())
        .filter(|&i| i != label_idx && !drop_columns.contains(&header[i]))
        .collect();
    let feature_names: Vec<String> = feature_idx.iter().map(|&i| header[i].clone()).collect();

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        let cell = |i: usize| record.get(i).unwrap_or("").trim();
        for &i in &feature_idx {
            let raw = cell(i);
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(DataError::Parse {
                        row,
                        column: header[i].clone(),
                        value: raw.to_string(),
                    })
                }
            }
        }
        let raw = cell(label_idx);
        let label = match raw.parse::<f64>() {
            Ok(0.0) => 0,
            Ok(1.0) => 1,
            _ => {
                return Err(DataError::Parse {
                    row,
                    column: label_column.to_string(),
                    value: raw.to_string(),
                })
            }
        };
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(DataError::EmptyDataset);
    }
    let features = Matrix::from_vec(labels.len(), feature_names.len(), values);
    Dataset::new(features, labels, feature_names, source)
}

/// Writes features followed by the label column.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>, label_column: &str) -> Result<(), DataError> {
    let mut out = BufWriter::new(File::create(path)?);
    write_csv_to(dataset, &mut out, label_column)?;
    out.flush()?;
    Ok(())
}

pub fn write_csv_to<W: Write>(dataset: &Dataset, out: W, label_column: &str) -> Result<(), DataError> {
    let mut wtr = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = dataset.feature_names.iter().map(String::as_str).collect();
    header.push(label_column);
    wtr.write_record(&header)?;
    for r in 0..dataset.n_samples() {
        let mut rec: Vec<String> = dataset.features.row(r).iter().map(|&v| format_f64(v)).collect();
        rec.push(dataset.labels[r].to_string());
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationModel {
    pub means: Vec<f64>,
    /// Population standard deviations; 0 for constant columns.
    pub stddevs: Vec<f64>,
    pub constant: Vec<bool>,
}

impl StandardizationModel {
    pub fn fit(features: &Matrix) -> Self {
        let (n, d) = features.shape();
        let mut means = vec![0.0; d];
        let mut stddevs = vec![0.0; d];
        let mut constant = vec![false; d];
        for c in 0..d {
            let col = features.column(c);
            let mean = col.iter().sum::<f64>() / n as f64;
            // Two-pass variance; the second pass corrects the mean's rounding.
            let corr = col.iter().map(|v| v - mean).sum::<f64>() / n as f64;
            let mean = mean + corr;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            means[c] = mean;
            if col.iter().all(|&v| v == col[0]) {
                constant[c] = true;
                means[c] = col[0];
            } else {
                stddevs[c] = var.sqrt();
            }
        }
        Self {
            means,
            stddevs,
            constant,
        }
    }

    pub fn apply(&self, features: &Matrix) -> Matrix {
        let mut out = features.clone();
        for r in 0..out.rows() {
            for (c, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = if self.constant[c] {
                    0.0
                } else {
                    (*v - self.means[c]) / self.stddevs[c]
                };
            }
        }
        out
    }

    pub fn invert(&self, standardized: &Matrix) -> Matrix {
        let mut out = standardized.clone();
        for r in 0..out.rows() {
            for (c, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = if self.constant[c] {
                    self.means[c]
                } else {
                    *v * self.stddevs[c] + self.means[c]
                };
            }
        }
        out
    }
}

/// Z-scores every column with the population standard deviation. Constant
/// columns become all zeros and are flagged in the returned model.
pub fn standardize(dataset: &Dataset) -> Result<(Dataset, StandardizationModel), DataError> {
    if dataset.n_samples() < 2 {
        return Err(DataError::Invalid("standardize needs at least 2 rows".into()));
    }
    let model = StandardizationModel::fit(&dataset.features);
    let features = model.apply(&dataset.features);
    let source = Provenance::Derived(format!("standardized({})", dataset.source.tag()));
    let out = dataset.with_features(features, source)?;
    Ok((out, model))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_samples: usize,
    pub n_features: usize,
    pub minority_fraction: f64,
    pub n_minority_clusters: usize,
    pub cluster_spread: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_samples: 2000,
            n_features: 20,
            minority_fraction: 0.05,
            n_minority_clusters: 3,
            cluster_spread: 0.5,
            seed: 42,
        }
    }
}

/// Spacing of the lattice the minority cluster centres sit on.
const LATTICE_STEP: f64 = 2.5;

impl SyntheticSpec {
    pub fn n_minority(&self) -> usize {
        (self.n_samples as f64 * self.minority_fraction).round() as usize
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |m: &str| Err(DataError::InvalidSpec(m.to_string()));
        if self.n_samples < 2 {
            return bad("n_samples must be at least 2");
        }
        if self.n_features == 0 {
            return bad("n_features must be at least 1");
        }
        if !(self.minority_fraction > 0.0 && self.minority_fraction < 0.5) {
            return bad("minority_fraction must lie in (0, 0.5)");
        }
        if self.n_minority_clusters == 0 {
            return bad("n_minority_clusters must be at least 1");
        }
        if !(self.cluster_spread > 0.0 && self.cluster_spread.is_finite()) {
            return bad("cluster_spread must be positive");
        }
        if self.n_minority() < self.n_minority_clusters {
            return bad("fewer minority samples than minority clusters");
        }
        Ok(())
    }

    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("spec serializes");
        hex::encode(Sha256::digest(json.as_bytes()))[..16].to_string()
    }
}

/// Majority rows are standard normal. Minority rows come from axis-aligned
/// Gaussian sub-clusters whose centres take values in
/// `{-LATTICE_STEP, 0, +LATTICE_STEP}` per dimension; every centre is
/// shifted in at least one dimension. Minority rows are scattered through
/// the matrix at seeded positions.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset, DataError> {
    spec.validate()?;
    let n = spec.n_samples;
    let d = spec.n_features;
    let n_min = spec.n_minority();
    let mut rng = stage_rng(spec.seed, "synthetic", 0);

    let mut centers = Vec::with_capacity(spec.n_minority_clusters);
    for _ in 0..spec.n_minority_clusters {
        let mut center: Vec<f64> = (0..d)
            .map(|_| LATTICE_STEP * f64::from(rng.random_range(-1i32..=1)))
            .collect();
        if center.iter().all(|&c| c == 0.0) {
            let f = rng.random_range(0..d);
            center[f] = if rng.random_bool(0.5) { LATTICE_STEP } else { -LATTICE_STEP };
        }
        centers.push(center);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut clusters = vec![None; n];
    for (m, &row) in order[..n_min].iter().enumerate() {
        clusters[row] = Some(m % spec.n_minority_clusters);
    }

    let mut features = Matrix::zeros(n, d);
    let mut labels = vec![0u8; n];
    for r in 0..n {
        let row = features.row_mut(r);
        match clusters[r] {
            Some(c) => {
                labels[r] = 1;
                for (f, v) in row.iter_mut().enumerate() {
                    let z: f64 = rng.sample(StandardNormal);
                    *v = centers[c][f] + spec.cluster_spread * z;
                }
            }
            None => {
                for v in row.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
            }
        }
    }
    let names = (0..d).map(|f| format!("f{}", f + 1)).collect();
    Dataset::new(
        features,
        labels,
        names,
        Provenance::Synthetic {
            spec_digest: spec.digest(),
            clusters,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassPartition {
    pub majority: Vec<usize>,
    pub minority: Vec<usize>,
}

pub fn class_partition(labels: &[u8]) -> Result<ClassPartition, DataError> {
    let (minority, majority): (Vec<usize>, Vec<usize>) =
        (0..labels.len()).partition(|&i| labels[i] == 1);
    if minority.is_empty() || majority.is_empty() {
        let label = u8::from(majority.is_empty());
        return Err(DataError::SingleClass {
            label,
            present: labels.len(),
        });
    }
    Ok(ClassPartition { majority, minority })
}
