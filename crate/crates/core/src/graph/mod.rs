//! Sample-similarity graphs.
//!
//! Nodes are samples. Edge weights come from the Gaussian-style kernel
//! `exp(-‖x_i − x_j‖₂ / σ)` (unsquared distance), except for the
//! mutual-information graph, which uses normalized mutual information
//! between per-sample bin vectors. Every node carries a self-loop of raw
//! weight 1, and each node's outgoing weights are normalized to sum to 1 so
//! the network can aggregate neighbours as a convex combination.

mod construct;
mod mutual_info;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{format_f64, Dataset};

pub use construct::{
    build_adaptive_threshold_graph, build_complete_graph, build_knn_graph, gaussian_similarity,
    median_bandwidth,
};
pub use mutual_info::{build_mutual_information_graph, normalized_mutual_information, sample_bin_vectors};

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("sigma must be positive and finite, got {0}")]
    NonPositiveSigma(f64),
    #[error("k = {k} is out of range for {n} nodes (need 1 <= k <= n - 1)")]
    InvalidK { k: usize, n: usize },
    #[error("mutual-information bins must be at least 2, got {0}")]
    InvalidBins(usize),
    #[error("all pairwise distances are zero")]
    DegenerateData,
    #[error("node {0} has a zero-weight neighbourhood")]
    ZeroNeighborhood(usize),
    #[error("graph needs at least {needed} nodes, got {got}")]
    TooFewNodes { needed: usize, got: usize },
    #[error("vector lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("unknown graph method `{0}`")]
    UnknownMethod(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphMethod {
    Knn,
    Complete,
    MutualInformation,
    AdaptiveThreshold,
}

impl GraphMethod {
    pub const ALL: [GraphMethod; 4] = [
        GraphMethod::Knn,
        GraphMethod::Complete,
        GraphMethod::MutualInformation,
        GraphMethod::AdaptiveThreshold,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            GraphMethod::Knn => "knn",
            GraphMethod::Complete => "complete",
            GraphMethod::MutualInformation => "mutual_information",
            GraphMethod::AdaptiveThreshold => "adaptive_threshold",
        }
    }
}

impl fmt::Display for GraphMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GraphMethod {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GraphMethod::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| GraphError::UnknownMethod(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMode {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphConfig {
    pub method: GraphMethod,
    pub k: usize,
    pub alpha: f64,
    pub mi_bins: usize,
    pub sigma_mode: SigmaMode,
    /// Row cap for the median-distance bandwidth estimate.
    pub sigma_sample_cap: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            method: GraphMethod::Knn,
            k: 10,
            alpha: 1.0,
            mi_bins: 4,
            sigma_mode: SigmaMode::Auto,
            sigma_sample_cap: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub neighbor: usize,
    pub raw_weight: f64,
    pub norm_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleGraph {
    adjacency: Vec<Vec<Edge>>,
    method: GraphMethod,
    sigma: Option<f64>,
}

impl SampleGraph {
    /// Assembles a graph from symmetric raw weights between distinct nodes.
    /// Self-loops of weight 1 are added, neighbour lists sorted, and
    /// normalized weights computed.
    pub(crate) fn from_raw_edges(
        n_nodes: usize,
        mut neighbors: Vec<Vec<(usize, f64)>>,
        method: GraphMethod,
        sigma: Option<f64>,
    ) -> Result<Self, GraphError> {
        debug_assert_eq!(neighbors.len(), n_nodes);
        let mut adjacency = Vec::with_capacity(n_nodes);
        for (i, list) in neighbors.iter_mut().enumerate() {
            list.push((i, 1.0));
            list.sort_by_key(|&(j, _)| j);
            list.dedup_by_key(|&mut (j, _)| j);
            adjacency.push(
                list.iter()
                    .map(|&(neighbor, raw_weight)| Edge {
                        neighbor,
                        raw_weight,
                        norm_weight: 0.0,
                    })
                    .collect(),
            );
        }
        normalize_neighborhood(SampleGraph {
            adjacency,
            method,
            sigma,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, node: usize) -> &[Edge] {
        &self.adjacency[node]
    }

    pub fn method(&self) -> GraphMethod {
        self.method
    }

    pub fn sigma(&self) -> Option<f64> {
        self.sigma
    }

    /// Directed entries including self-loops.
    pub fn n_entries(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    /// Undirected edges between distinct nodes.
    pub fn n_undirected_edges(&self) -> usize {
        (self.n_entries() - self.n_nodes()) / 2
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len() - 1
    }

    pub fn raw_weight(&self, i: usize, j: usize) -> Option<f64> {
        let list = &self.adjacency[i];
        list.binary_search_by_key(&j, |e| e.neighbor)
            .ok()
            .map(|p| list[p].raw_weight)
    }

    /// Edge list as CSV `src,dst,raw_weight,norm_weight`, one row per
    /// directed entry, self-loops included.
    pub fn write_edge_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "src,dst,raw_weight,norm_weight")?;
        for (i, list) in self.adjacency.iter().enumerate() {
            for e in list {
                writeln!(
                    out,
                    "{i},{},{},{}",
                    e.neighbor,
                    format_f64(e.raw_weight),
                    format_f64(e.norm_weight)
                )?;
            }
        }
        Ok(())
    }

    /// Relabels nodes: node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> SampleGraph {
        let n = self.n_nodes();
        let mut adjacency = vec![Vec::new(); n];
        for (i, list) in self.adjacency.iter().enumerate() {
            let mut mapped: Vec<Edge> = list
                .iter()
                .map(|e| Edge {
                    neighbor: perm[e.neighbor],
                    ..*e
                })
                .collect();
            mapped.sort_by_key(|e| e.neighbor);
            adjacency[perm[i]] = mapped;
        }
        SampleGraph {
            adjacency,
            method: self.method,
            sigma: self.sigma,
        }
    }
}

/// Recomputes every node's normalized weights as
/// `raw(i, j) / Σ_k raw(i, k)`, summing in neighbour-index order.
pub fn normalize_neighborhood(mut graph: SampleGraph) -> Result<SampleGraph, GraphError> {
    for (i, list) in graph.adjacency.iter_mut().enumerate() {
        let total: f64 = list.iter().map(|e| e.raw_weight).sum();
        if total.is_nan() || total <= 0.0 {
            return Err(GraphError::ZeroNeighborhood(i));
        }
        for e in list.iter_mut() {
            e.norm_weight = e.raw_weight / total;
        }
    }
    Ok(graph)
}

/// Bandwidth selection per `config.sigma_mode`; `None` for the MI graph.
pub fn resolve_sigma(dataset: &Dataset, config: &GraphConfig, seed: u64) -> Result<Option<f64>, GraphError> {
    if config.method == GraphMethod::MutualInformation {
        return Ok(None);
    }
    match config.sigma_mode {
        SigmaMode::Fixed(s) if s > 0.0 && s.is_finite() => Ok(Some(s)),
        SigmaMode::Fixed(s) => Err(GraphError::NonPositiveSigma(s)),
        SigmaMode::Auto => median_bandwidth(dataset.features(), config.sigma_sample_cap, seed).map(Some),
    }
}

/// Dispatches on `config.method`.
pub fn build_graph(dataset: &Dataset, config: &GraphConfig, seed: u64) -> Result<SampleGraph, GraphError> {
    let x = dataset.features();
    let sigma = resolve_sigma(dataset, config, seed)?;
    match config.method {
        GraphMethod::Knn => build_knn_graph(x, config.k, sigma.expect("sigma resolved")),
        GraphMethod::Complete => build_complete_graph(x, sigma.expect("sigma resolved")),
        GraphMethod::AdaptiveThreshold => {
            build_adaptive_threshold_graph(x, config.alpha, sigma.expect("sigma resolved"))
        }
        GraphMethod::MutualInformation => build_mutual_information_graph(x, config.mi_bins, config.k),
    }
}

/// Degree summary per class, for plotting the graph's class structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeStats {
    pub class: u8,
    pub nodes: usize,
    pub mean_degree: f64,
    pub min_degree: usize,
    pub max_degree: usize,
    /// Share of this class's edge endpoints that land in the same class.
    pub same_class_fraction: f64,
}

pub fn degree_stats(graph: &SampleGraph, labels: &[u8]) -> Vec<DegreeStats> {
    (0u8..=1)
        .filter_map(|class| {
            let nodes: Vec<usize> = (0..graph.n_nodes()).filter(|&i| labels[i] == class).collect();
            if nodes.is_empty() {
                return None;
            }
            let degrees: Vec<usize> = nodes.iter().map(|&i| graph.degree(i)).collect();
            let mut same = 0usize;
            let mut total = 0usize;
            for &i in &nodes {
                for e in graph.neighbors(i).iter().filter(|e| e.neighbor != i) {
                    total += 1;
                    same += usize::from(labels[e.neighbor] == class);
                }
            }
            Some(DegreeStats {
                class,
                nodes: nodes.len(),
                mean_degree: degrees.iter().sum::<usize>() as f64 / nodes.len() as f64,
                min_degree: *degrees.iter().min().expect("non-empty"),
                max_degree: *degrees.iter().max().expect("non-empty"),
                same_class_fraction: if total == 0 { 0.0 } else { same as f64 / total as f64 },
            })
        })
        .collect()
}
