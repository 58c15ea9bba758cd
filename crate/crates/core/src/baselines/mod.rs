//! The three comparison pipelines: learned graph embeddings, raw features,
//! and PCA scores, each discretized and mined the same way.

mod pca;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, PipelineConfig};
use crate::data::{class_partition, standardize, DataError, Dataset};
use crate::discretize::{discretize, DiscretizeError, TransactionDb};
use crate::gnn::{init_model, CheckpointError, GnnError, ModelDims};
use crate::graph::{build_graph, GraphError, SampleGraph};
use crate::linalg::Matrix;
use crate::mining::{mine_patterns, mining_report, MiningError, MiningReport, PatternSet, ReportProvenance};
use crate::trainer::{extract_embeddings, train, TrainError, TrainHistory};

pub use pca::{column_means, covariance, jacobi_eigen, pca_fit, pca_reconstruct, pca_transform, PcaError, PcaModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Embedding,
    Raw,
    Pca,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Embedding, Variant::Raw, Variant::Pca];

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Embedding => "embedding",
            Variant::Raw => "raw",
            Variant::Pca => "pca",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown variant `{s}`"))
    }
}

#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Model(#[from] GnnError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Pca(#[from] PcaError),
    #[error(transparent)]
    Discretize(#[from] DiscretizeError),
    #[error(transparent)]
    Mining(#[from] MiningError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Report(#[from] crate::report::ReportError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// A failure tagged with the stage that raised it.
#[derive(Debug, Error)]
#[error("{stage}: {source}")]
pub struct PipelineError {
    pub stage: &'static str,
    #[source]
    pub source: StageError,
}

impl PipelineError {
    pub fn new(stage: &'static str, source: impl Into<StageError>) -> Self {
        Self {
            stage,
            source: source.into(),
        }
    }

    /// `Module::Variant` name of the underlying error.
    pub fn code(&self) -> String {
        let (module, inner) = match &self.source {
            StageError::Config(e) => ("ConfigError", format!("{e:?}")),
            StageError::Data(e) => ("DataError", format!("{e:?}")),
            StageError::Graph(e) => ("GraphError", format!("{e:?}")),
            StageError::Model(e) => ("GnnError", format!("{e:?}")),
            StageError::Train(e) => ("TrainError", format!("{e:?}")),
            StageError::Pca(e) => ("PcaError", format!("{e:?}")),
            StageError::Discretize(e) => ("DiscretizeError", format!("{e:?}")),
            StageError::Mining(e) => ("MiningError", format!("{e:?}")),
            StageError::Checkpoint(e) => ("CheckpointError", format!("{e:?}")),
            StageError::Report(e) => ("ReportError", format!("{e:?}")),
            StageError::Io(_) => ("IoError", "Io".to_string()),
        };
        let variant: String = inner.chars().take_while(|c| c.is_alphanumeric() || *c == '_').collect();
        format!("{module}::{variant}")
    }

    /// 2 for configuration problems, 3 for bad input data, 4 otherwise.
    pub fn exit_code(&self) -> i32 {
        match &self.source {
            StageError::Config(_) => 2,
            StageError::Data(_) | StageError::Train(TrainError::Data(_)) => 3,
            _ => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Record wall-clock time in the report.
    pub timing: bool,
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub report: MiningReport,
    /// Stages in execution order.
    pub stages: Vec<&'static str>,
    pub patterns: PatternSet,
    pub db: TransactionDb,
    pub graph: Option<SampleGraph>,
    pub history: Option<TrainHistory>,
}

/// Runs one variant end to end. Every stochastic stage derives its stream
/// from `config.seed`, so the outcome is a function of the dataset and
/// config alone.
pub fn run_pipeline(
    variant: Variant,
    dataset: &Dataset,
    config: &PipelineConfig,
    options: RunOptions,
) -> Result<PipelineOutcome, PipelineError> {
    let started = Instant::now();
    config.validate().map_err(|e| PipelineError::new("config", e))?;
    class_partition(dataset.labels()).map_err(|e| PipelineError::new("data", e))?;

    let mut stages = Vec::new();
    let data = if config.data.standardize {
        stages.push("standardize");
        standardize(dataset).map_err(|e| PipelineError::new("standardize", e))?.0
    } else {
        dataset.clone()
    };

    let mut graph = None;
    let mut history = None;
    let representation: Matrix = match variant {
        Variant::Raw => data.features().clone(),
        Variant::Pca => {
            stages.push("pca");
            let rank = config.model.embedding_dim.min(data.n_features());
            let model = pca_fit(data.features(), rank).map_err(|e| PipelineError::new("pca", e))?;
            pca_transform(&model, data.features()).map_err(|e| PipelineError::new("pca", e))?
        }
        Variant::Embedding => {
            stages.push("graph");
            let g = build_graph(&data, &config.graph, config.seed).map_err(|e| PipelineError::new("graph", e))?;
            stages.push("train");
            let dims = ModelDims::new(data.n_features(), config.model.hidden_dim, config.model.embedding_dim)
                .map_err(|e| PipelineError::new("train", e))?;
            let h = train(
                init_model(dims, config.seed),
                &g,
                data.features(),
                data.labels(),
                &config.train_config(),
            )
            .map_err(|e| PipelineError::new("train", e))?;
            stages.push("embed");
            let emb = extract_embeddings(&h.model, &g, data.features()).map_err(|e| PipelineError::new("embed", e))?;
            graph = Some(g);
            history = Some(h);
            emb
        }
    };

    stages.push("discretize");
    let db = discretize(&representation, data.labels(), config.bins).map_err(|e| PipelineError::new("discretize", e))?;
    stages.push("mine");
    let patterns = mine_patterns(&db, &config.mining).map_err(|e| PipelineError::new("mine", e))?;

    stages.push("report");
    let provenance = ReportProvenance {
        variant,
        graph_method: (variant == Variant::Embedding).then_some(config.graph.method),
        embedding_dim: representation.cols(),
        seed: config.seed,
        config_digest: config.digest(),
        runtime_ms: options.timing.then(|| started.elapsed().as_millis() as u64),
    };
    let report = mining_report(&patterns, &db, provenance);
    log::info!("{variant}: {}", stages.join(" > "));
    Ok(PipelineOutcome {
        report,
        stages,
        patterns,
        db,
        graph,
        history,
    })
}
