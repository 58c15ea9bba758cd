//! Pipeline configuration: JSON parsing with defaults, strict key checking,
//! range validation, and a digest over the resolved values.

use std::path::Path;

use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::{GraphConfig, GraphMethod, SigmaMode};
use crate::mining::{MiningParams, Scope};
use crate::trainer::TrainConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config syntax error: {0}")]
    Syntax(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },
    #[error("cannot read config: {0}")]
    Io(String),
}

fn invalid(key: &str, reason: &str) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        reason: reason.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSection {
    pub label_column: String,
    pub drop_columns: Vec<String>,
    pub standardize: bool,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            label_column: "Class".into(),
            drop_columns: Vec::new(),
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSection {
    pub hidden_dim: usize,
    pub embedding_dim: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            hidden_dim: 64,
            embedding_dim: 128,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub epochs: usize,
    pub lambda: f64,
    pub beta: f64,
    pub margin: f64,
    pub pos_pairs: usize,
    pub neg_pairs: usize,
    pub clamp_epsilon: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            learning_rate: t.learning_rate,
            epochs: t.epochs,
            lambda: t.lambda,
            beta: t.beta,
            margin: t.margin,
            pos_pairs: t.pos_pairs,
            neg_pairs: t.neg_pairs,
            clamp_epsilon: t.clamp_epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub data: DataSection,
    pub graph: GraphConfig,
    pub model: ModelSection,
    pub train: TrainSection,
    pub bins: usize,
    pub mining: MiningParams,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            data: DataSection::default(),
            graph: GraphConfig::default(),
            model: ModelSection::default(),
            train: TrainSection::default(),
            bins: 4,
            mining: MiningParams::default(),
            seed: 42,
        }
    }
}

/// View over one JSON object that rejects keys outside `known`.
struct Section<'a> {
    path: &'static str,
    map: &'a Map<String, Value>,
}

impl<'a> Section<'a> {
    fn new(value: &'a Value, path: &'static str, known: &[&str]) -> Result<Self, ConfigError> {
        let map = value
            .as_object()
            .ok_or_else(|| invalid(if path.is_empty() { "<root>" } else { path }, "expected an object"))?;
        let section = Section { path, map };
        if let Some(unknown) = map.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(ConfigError::UnknownKey(section.key(unknown)));
        }
        Ok(section)
    }

    fn key(&self, k: &str) -> String {
        if self.path.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.path)
        }
    }

    fn get(&self, k: &str) -> Option<&'a Value> {
        self.map.get(k)
    }

    fn f64(&self, k: &str, default: f64) -> Result<f64, ConfigError> {
        match self.get(k) {
            None => Ok(default),
            Some(v) => v.as_f64().ok_or_else(|| invalid(&self.key(k), "expected a number")),
        }
    }

    fn u64(&self, k: &str, default: u64) -> Result<u64, ConfigError> {
        match self.get(k) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .ok_or_else(|| invalid(&self.key(k), "expected a non-negative integer")),
        }
    }

    fn usize(&self, k: &str, default: usize) -> Result<usize, ConfigError> {
        let v = self.u64(k, default as u64)?;
        usize::try_from(v).map_err(|_| invalid(&self.key(k), "integer out of range"))
    }

    fn bool(&self, k: &str, default: bool) -> Result<bool, ConfigError> {
        match self.get(k) {
            None => Ok(default),
            Some(v) => v.as_bool().ok_or_else(|| invalid(&self.key(k), "expected true or false")),
        }
    }

    fn string(&self, k: &str, default: &str) -> Result<String, ConfigError> {
        match self.get(k) {
            None => Ok(default.to_string()),
            Some(v) => v
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| invalid(&self.key(k), "expected a string")),
        }
    }

    fn sub(&self, k: &'static str, known: &[&str]) -> Result<Option<Section<'a>>, ConfigError> {
        self.get(k).map(|v| Section::new(v, k, known)).transpose()
    }
}

const ROOT_KEYS: &[&str] = &["data", "graph", "model", "train", "discretize", "mining", "seed"];
const DATA_KEYS: &[&str] = &["label_column", "drop_columns", "standardize"];
const GRAPH_KEYS: &[&str] = &["method", "k", "alpha", "mi_bins", "sigma", "sigma_sample_cap"];
const MODEL_KEYS: &[&str] = &["hidden_dim", "embedding_dim"];
const TRAIN_KEYS: &[&str] = &[
    "learning_rate",
    "epochs",
    "lambda",
    "beta",
    "margin",
    "pos_pairs",
    "neg_pairs",
    "clamp_epsilon",
];
const DISCRETIZE_KEYS: &[&str] = &["bins"];
const MINING_KEYS: &[&str] = &["min_support", "scope", "maximal_only", "max_len"];

impl PipelineConfig {
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        Self::from_value(&value)
    }

    /// Resolves defaults for absent keys, then validates.
    pub fn from_value(value: &Value) -> Result<Self, ConfigError> {
        let root = Section::new(value, "", ROOT_KEYS)?;
        let mut c = PipelineConfig::default();

        if let Some(s) = root.sub("data", DATA_KEYS)? {
            c.data.label_column = s.string("label_column", &c.data.label_column)?;
            if let Some(v) = s.get("drop_columns") {
                let arr = v
                    .as_array()
                    .ok_or_else(|| invalid("data.drop_columns", "expected an array of strings"))?;
                c.data.drop_columns = arr
                    .iter()
                    .map(|x| x.as_str().map(str::to_string))
                    .collect::<Option<_>>()
                    .ok_or_else(|| invalid("data.drop_columns", "expected an array of strings"))?;
            }
            c.data.standardize = s.bool("standardize", c.data.standardize)?;
        }
        if let Some(s) = root.sub("graph", GRAPH_KEYS)? {
            if let Some(v) = s.get("method") {
                let name = v.as_str().ok_or_else(|| invalid("graph.method", "expected a string"))?;
                c.graph.method = name
                    .parse::<GraphMethod>()
                    .map_err(|_| invalid("graph.method", "must be one of knn, complete, mutual_information, adaptive_threshold"))?;
            }
            c.graph.k = s.usize("k", c.graph.k)?;
            c.graph.alpha = s.f64("alpha", c.graph.alpha)?;
            c.graph.mi_bins = s.usize("mi_bins", c.graph.mi_bins)?;
            c.graph.sigma_mode = match s.get("sigma") {
                None => c.graph.sigma_mode,
                Some(Value::String(t)) if t == "auto" => SigmaMode::Auto,
                Some(v) => SigmaMode::Fixed(
                    v.as_f64()
                        .ok_or_else(|| invalid("graph.sigma", "expected \"auto\" or a number"))?,
                ),
            };
            c.graph.sigma_sample_cap = s.usize("sigma_sample_cap", c.graph.sigma_sample_cap)?;
        }
        if let Some(s) = root.sub("model", MODEL_KEYS)? {
            c.model.hidden_dim = s.usize("hidden_dim", c.model.hidden_dim)?;
            c.model.embedding_dim = s.usize("embedding_dim", c.model.embedding_dim)?;
        }
        if let Some(s) = root.sub("train", TRAIN_KEYS)? {
            let t = &mut c.train;
            t.learning_rate = s.f64("learning_rate", t.learning_rate)?;
            t.epochs = s.usize("epochs", t.epochs)?;
            t.lambda = s.f64("lambda", t.lambda)?;
            t.beta = s.f64("beta", t.beta)?;
            t.margin = s.f64("margin", t.margin)?;
            t.pos_pairs = s.usize("pos_pairs", t.pos_pairs)?;
            t.neg_pairs = s.usize("neg_pairs", t.neg_pairs)?;
            t.clamp_epsilon = s.f64("clamp_epsilon", t.clamp_epsilon)?;
        }
        if let Some(s) = root.sub("discretize", DISCRETIZE_KEYS)? {
            c.bins = s.usize("bins", c.bins)?;
        }
        if let Some(s) = root.sub("mining", MINING_KEYS)? {
            c.mining.min_support = s.f64("min_support", c.mining.min_support)?;
            if let Some(v) = s.get("scope") {
                let name = v.as_str().ok_or_else(|| invalid("mining.scope", "expected a string"))?;
                c.mining.scope = name
                    .parse::<Scope>()
                    .map_err(|_| invalid("mining.scope", "must be minority or full"))?;
            }
            c.mining.maximal_only = s.bool("maximal_only", c.mining.maximal_only)?;
            c.mining.max_len = match s.get("max_len") {
                None => c.mining.max_len,
                Some(Value::Null) => None,
                Some(_) => Some(s.usize("max_len", 0)?),
            };
        }
        c.seed = root.u64("seed", c.seed)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ConfigError::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |ok: bool, key: &str, reason: &str| if ok { Ok(()) } else { Err(invalid(key, reason)) };
        let positive = |v: f64| v > 0.0 && v.is_finite();

        check(!self.data.label_column.is_empty(), "data.label_column", "must not be empty")?;
        check(self.graph.k >= 1, "graph.k", "must be ≥ 1")?;
        check(self.graph.alpha.is_finite(), "graph.alpha", "must be finite")?;
        check(self.graph.mi_bins >= 2, "graph.mi_bins", "must be ≥ 2")?;
        if let SigmaMode::Fixed(s) = self.graph.sigma_mode {
            check(positive(s), "graph.sigma", "must be > 0")?;
        }
        check(self.graph.sigma_sample_cap >= 2, "graph.sigma_sample_cap", "must be ≥ 2")?;
        check(self.model.hidden_dim >= 1, "model.hidden_dim", "must be ≥ 1")?;
        check(self.model.embedding_dim >= 1, "model.embedding_dim", "must be ≥ 1")?;
        let t = &self.train;
        check(positive(t.learning_rate), "train.learning_rate", "must be > 0")?;
        check(t.lambda >= 0.0 && t.lambda.is_finite(), "train.lambda", "must be ≥ 0")?;
        check(t.beta > 0.0 && t.beta <= 1.0, "train.beta", "must lie in (0, 1]")?;
        check(positive(t.margin), "train.margin", "must be > 0")?;
        check(t.pos_pairs >= 1, "train.pos_pairs", "must be ≥ 1")?;
        check(t.neg_pairs >= 1, "train.neg_pairs", "must be ≥ 1")?;
        check(
            t.clamp_epsilon > 0.0 && t.clamp_epsilon <= 1e-3,
            "train.clamp_epsilon",
            "must lie in (0, 1e-3]",
        )?;
        check(self.bins >= 1, "discretize.bins", "must be ≥ 1")?;
        let ms = self.mining.min_support;
        check(ms > 0.0 && ms <= 1.0, "mining.min_support", "must lie in (0, 1]")?;
        if let Some(m) = self.mining.max_len {
            check(m >= 1, "mining.max_len", "must be ≥ 1 or null")?;
        }
        Ok(())
    }

    /// Fully resolved config; keys sort canonically under `serde_json`.
    pub fn to_value(&self) -> Value {
        let sigma = match self.graph.sigma_mode {
            SigmaMode::Auto => Value::from("auto"),
            SigmaMode::Fixed(s) => Value::from(s),
        };
        let t = &self.train;
        serde_json::json!({
            "data": {
                "label_column": self.data.label_column,
                "drop_columns": self.data.drop_columns,
                "standardize": self.data.standardize,
            },
            "graph": {
                "method": self.graph.method.as_str(),
                "k": self.graph.k,
                "alpha": self.graph.alpha,
                "mi_bins": self.graph.mi_bins,
                "sigma": sigma,
                "sigma_sample_cap": self.graph.sigma_sample_cap,
            },
            "model": {
                "hidden_dim": self.model.hidden_dim,
                "embedding_dim": self.model.embedding_dim,
            },
            "train": {
                "learning_rate": t.learning_rate,
                "epochs": t.epochs,
                "lambda": t.lambda,
                "beta": t.beta,
                "margin": t.margin,
                "pos_pairs": t.pos_pairs,
                "neg_pairs": t.neg_pairs,
                "clamp_epsilon": t.clamp_epsilon,
            },
            "discretize": { "bins": self.bins },
            "mining": {
                "min_support": self.mining.min_support,
                "scope": self.mining.scope.to_string(),
                "maximal_only": self.mining.maximal_only,
                "max_len": self.mining.max_len,
            },
            "seed": self.seed,
        })
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&self.to_value()).expect("config serializes")
    }

    /// SHA-256 hex of the canonical JSON.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            learning_rate: t.learning_rate,
            epochs: t.epochs,
            lambda: t.lambda,
            beta: t.beta,
            margin: t.margin,
            pos_pairs: t.pos_pairs,
            neg_pairs: t.neg_pairs,
            seed: self.seed,
            clamp_epsilon: t.clamp_epsilon,
        }
    }
}
