//! Minority-class pattern mining for imbalanced tabular data.
//!
//! Samples become nodes of a similarity graph, a two-layer graph
//! convolution network learns embeddings under a class-weighted global loss
//! plus a contrastive loss on minority pairs, and the embeddings are
//! quantile-binned into transactions that FP-Growth mines for frequent
//! minority itemsets. Raw-feature and PCA pipelines provide baselines.

pub mod baselines;
pub mod cli;
pub mod config;
pub mod data;
pub mod discretize;
pub mod gnn;
pub mod graph;
pub mod linalg;
pub mod mining;
pub mod report;
pub mod seed;
pub mod trainer;
