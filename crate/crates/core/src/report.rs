//! Report bundles and their JSON / CSV renderings.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::config::{ConfigError, PipelineConfig};
use crate::data::format_f64;
use crate::mining::MiningReport;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed report: {0}")]
    Malformed(String),
    #[error("invalid bundle: {0}")]
    InvalidBundle(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// The quantity that varies between the reports of a bundle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Variant,
    EmbeddingDim,
    GraphMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown format `{other}` (expected json or csv)")),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub tool_version: String,
    pub dataset_digest: String,
    pub axis: Axis,
    /// The base config; sweeps override only the axis field.
    pub config: PipelineConfig,
    pub reports: Vec<MiningReport>,
}

pub const CSV_COLUMNS: [&str; 10] = [
    "variant",
    "graph_method",
    "embedding_dim",
    "num_patterns",
    "avg_support",
    "avg_confidence",
    "minority_coverage",
    "seed",
    "config_digest",
    "runtime_ms",
];

impl ReportBundle {
    pub fn new(dataset_digest: String, axis: Axis, config: PipelineConfig, reports: Vec<MiningReport>) -> Self {
        Self {
            tool_version: TOOL_VERSION.to_string(),
            dataset_digest,
            axis,
            config,
            reports,
        }
    }

    fn axis_key(&self, r: &MiningReport) -> String {
        match self.axis {
            Axis::Variant => r.variant.to_string(),
            Axis::EmbeddingDim => r.embedding_dim.to_string(),
            Axis::GraphMethod => r.graph_method.map(|m| m.to_string()).unwrap_or_default(),
        }
    }

    /// Axis values must be distinct.
    pub fn validate(&self) -> Result<(), ReportError> {
        let mut seen = HashSet::new();
        for r in &self.reports {
            let key = self.axis_key(r);
            if !seen.insert(key.clone()) {
                return Err(ReportError::InvalidBundle(format!("duplicate axis value `{key}`")));
            }
        }
        Ok(())
    }

    pub fn to_value(&self) -> Value {
        serde_json::json!({
            "tool_version": self.tool_version,
            "dataset_digest": self.dataset_digest,
            "axis": self.axis,
            "config": self.config.to_value(),
            "reports": self.reports,
        })
    }

    /// Pretty JSON with sorted keys and a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("bundle serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        let v: Value = serde_json::from_str(text).map_err(|e| ReportError::Malformed(e.to_string()))?;
        let field = |k: &str| v.get(k).ok_or_else(|| ReportError::Malformed(format!("missing `{k}`")));
        let string = |k: &str| {
            field(k)?
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| ReportError::Malformed(format!("`{k}` is not a string")))
        };
        let malformed = |e: serde_json::Error| ReportError::Malformed(e.to_string());
        Ok(Self {
            tool_version: string("tool_version")?,
            dataset_digest: string("dataset_digest")?,
            axis: serde_json::from_value(field("axis")?.clone()).map_err(malformed)?,
            config: PipelineConfig::from_value(field("config")?)?,
            reports: serde_json::from_value(field("reports")?.clone()).map_err(malformed)?,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_COLUMNS).expect("in-memory write");
        for r in &self.reports {
            w.write_record([
                r.variant.to_string(),
                r.graph_method.map(|m| m.to_string()).unwrap_or_default(),
                r.embedding_dim.to_string(),
                r.num_patterns.to_string(),
                format_f64(r.avg_support),
                format_f64(r.avg_confidence),
                format_f64(r.minority_coverage),
                r.seed.to_string(),
                r.config_digest.clone(),
                r.runtime_ms.map(|t| t.to_string()).unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Json => self.to_json(),
            ReportFormat::Csv => self.to_csv(),
        }
    }
}

pub fn emit_report(bundle: &ReportBundle, format: ReportFormat, out_path: impl AsRef<Path>) -> Result<(), ReportError> {
    bundle.validate()?;
    std::fs::write(out_path, bundle.render(format))?;
    Ok(())
}
