//! Command-line front end: argument parsing, subcommand dispatch, and the
//! machine-readable error record.

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::baselines::{run_pipeline, PipelineError, PipelineOutcome, RunOptions, Variant};
use crate::config::PipelineConfig;
use crate::data::{generate_synthetic, load_csv, standardize, write_csv, Dataset, SyntheticSpec};
use crate::gnn::save_checkpoint;
use crate::graph::{build_graph, degree_stats, GraphMethod};
use crate::mining::write_patterns_csv;
use crate::report::{emit_report, Axis, ReportBundle, ReportFormat};

pub const DEFAULT_DIMS: [usize; 4] = [32, 64, 128, 256];

#[derive(Debug, Parser)]
#[command(name = "graphmine", version, about = "Minority-class pattern mining on graph embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON config; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Log stages and per-epoch training loss to stderr.
    #[arg(long, short)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "json")]
    pub format: ReportFormat,
    /// Record wall-clock runtime in reports (makes output non-reproducible).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Write a synthetic imbalanced dataset as CSV.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2000)]
        n_samples: usize,
        #[arg(long, default_value_t = 20)]
        n_features: usize,
        #[arg(long, default_value_t = 0.05)]
        minority_fraction: f64,
        #[arg(long, default_value_t = 3)]
        clusters: usize,
        #[arg(long, default_value_t = 0.5)]
        spread: f64,
    },
    /// Run the embedding pipeline once.
    Mine {
        #[command(flatten)]
        run: RunArgs,
        /// Also write the mined patterns.
        #[arg(long)]
        patterns: Option<PathBuf>,
        /// Also write the transaction database.
        #[arg(long)]
        transactions: Option<PathBuf>,
        /// Also save the trained model.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Embedding, raw-feature and PCA pipelines side by side.
    Compare {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Embedding pipeline across embedding dimensions.
    SweepDims {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_DIMS)]
        dims: Vec<usize>,
    },
    /// Embedding pipeline across graph constructors.
    SweepGraphs {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', default_values_t = GraphMethod::ALL)]
        methods: Vec<GraphMethod>,
    },
    /// Write the sample graph as an edge list plus per-class degree stats.
    ExportGraph {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Degree statistics JSON; printed to stdout when omitted.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
}

impl Command {
    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Synth { common, .. } | Command::ExportGraph { common, .. } => common,
            Command::Mine { run, .. }
            | Command::Compare { run }
            | Command::SweepDims { run, .. }
            | Command::SweepGraphs { run, .. } => &run.common,
        }
    }
}

pub fn resolve_config(common: &CommonArgs) -> Result<PipelineConfig, PipelineError> {
    let mut config = match &common.config {
        Some(path) => PipelineConfig::load(path).map_err(|e| PipelineError::new("config", e))?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    config.validate().map_err(|e| PipelineError::new("config", e))?;
    Ok(config)
}

fn load(path: &Path, config: &PipelineConfig) -> Result<Dataset, PipelineError> {
    load_csv(path, &config.data.label_column, &config.data.drop_columns).map_err(|e| PipelineError::new("load", e))
}

fn io(stage: &'static str) -> impl Fn(std::io::Error) -> PipelineError {
    move |e| PipelineError::new(stage, e)
}

fn log_training(outcome: &PipelineOutcome, verbose: bool) {
    if let (true, Some(h)) = (verbose, &outcome.history) {
        eprintln!("epoch,total,global,local");
        for line in h.log_lines() {
            eprintln!("{line}");
        }
    }
}

fn emit(bundle: &ReportBundle, run: &RunArgs) -> Result<(), PipelineError> {
    emit_report(bundle, run.format, &run.out).map_err(|e| PipelineError::new("report", e))
}

/// Sweep over configs that differ in one field, keeping the given order.
fn sweep(
    dataset: &Dataset,
    configs: Vec<PipelineConfig>,
    run: &RunArgs,
) -> Result<Vec<crate::mining::MiningReport>, PipelineError> {
    let options = RunOptions { timing: run.timing };
    configs
        .iter()
        .map(|c| {
            let outcome = run_pipeline(Variant::Embedding, dataset, c, options)?;
            log_training(&outcome, run.common.verbose);
            Ok(outcome.report)
        })
        .collect()
}

/// Executes one subcommand, writing its artifacts.
pub fn run_command(command: &Command) -> Result<(), PipelineError> {
    let config = resolve_config(command.common())?;
    match command {
        Command::Synth {
            out,
            n_samples,
            n_features,
            minority_fraction,
            clusters,
            spread,
            ..
        } => {
            let spec = SyntheticSpec {
                n_samples: *n_samples,
                n_features: *n_features,
                minority_fraction: *minority_fraction,
                n_minority_clusters: *clusters,
                cluster_spread: *spread,
                seed: config.seed,
            };
            let ds = generate_synthetic(&spec).map_err(|e| PipelineError::new("synth", e))?;
            write_csv(&ds, out, &config.data.label_column).map_err(|e| PipelineError::new("synth", e))
        }
        Command::Mine {
            run,
            patterns,
            transactions,
            checkpoint,
        } => {
            let ds = load(&run.data, &config)?;
            let outcome = run_pipeline(Variant::Embedding, &ds, &config, RunOptions { timing: run.timing })?;
            log_training(&outcome, run.common.verbose);
            if let Some(path) = patterns {
                let f = BufWriter::new(File::create(path).map_err(io("report"))?);
                write_patterns_csv(&outcome.patterns, &outcome.db, f).map_err(io("report"))?;
            }
            if let Some(path) = transactions {
                let f = BufWriter::new(File::create(path).map_err(io("report"))?);
                outcome.db.write_to(f).map_err(io("report"))?;
            }
            if let (Some(path), Some(h)) = (checkpoint, &outcome.history) {
                save_checkpoint(&h.model, path).map_err(|e| PipelineError::new("report", e))?;
            }
            let bundle = ReportBundle::new(ds.digest(), Axis::Variant, config, vec![outcome.report]);
            emit(&bundle, run)
        }
        Command::Compare { run } => {
            let ds = load(&run.data, &config)?;
            let mut reports = Vec::new();
            for variant in Variant::ALL {
                let outcome = run_pipeline(variant, &ds, &config, RunOptions { timing: run.timing })?;
                log_training(&outcome, run.common.verbose);
                reports.push(outcome.report);
            }
            emit(&ReportBundle::new(ds.digest(), Axis::Variant, config, reports), run)
        }
        Command::SweepDims { run, dims } => {
            let ds = load(&run.data, &config)?;
            let mut dims = dims.clone();
            dims.sort_unstable();
            dims.dedup();
            let configs = dims
                .iter()
                .map(|&d| {
                    let mut c = config.clone();
                    c.model.embedding_dim = d;
                    c
                })
                .collect();
            let reports = sweep(&ds, configs, run)?;
            emit(&ReportBundle::new(ds.digest(), Axis::EmbeddingDim, config, reports), run)
        }
        Command::SweepGraphs { run, methods } => {
            let ds = load(&run.data, &config)?;
            let configs = GraphMethod::ALL
                .into_iter()
                .filter(|m| methods.contains(m))
                .map(|m| {
                    let mut c = config.clone();
                    c.graph.method = m;
                    c
                })
                .collect();
            let reports = sweep(&ds, configs, run)?;
            emit(&ReportBundle::new(ds.digest(), Axis::GraphMethod, config, reports), run)
        }
        Command::ExportGraph { data, out, stats, .. } => {
            let raw = load(data, &config)?;
            let ds = if config.data.standardize {
                standardize(&raw).map_err(|e| PipelineError::new("standardize", e))?.0
            } else {
                raw.clone()
            };
            let graph = build_graph(&ds, &config.graph, config.seed).map_err(|e| PipelineError::new("graph", e))?;
            let f = BufWriter::new(File::create(out).map_err(io("export"))?);
            graph.write_edge_csv(f).map_err(io("export"))?;
            let summary = serde_json::json!({
                "graph_method": graph.method(),
                "n_nodes": graph.n_nodes(),
                "n_undirected_edges": graph.n_undirected_edges(),
                "sigma": graph.sigma(),
                "seed": config.seed,
                "config_digest": config.digest(),
                "dataset_digest": raw.digest(),
                "classes": degree_stats(&graph, ds.labels()),
            });
            let text = serde_json::to_string_pretty(&summary).expect("stats serialize") + "\n";
            match stats {
                Some(path) => std::fs::write(path, text).map_err(io("export")),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
    }
}

/// `{"error": {...}}` line written to stderr on failure.
pub fn error_record(err: &PipelineError) -> String {
    serde_json::json!({
        "error": {
            "stage": err.stage,
            "code": err.code(),
            "exit_code": err.exit_code(),
            "message": err.to_string(),
        }
    })
    .to_string()
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = if cli.command.common().verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match run_command(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_record(&e));
            e.exit_code()
        }
    }
}
