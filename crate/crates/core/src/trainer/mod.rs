//! Hierarchical objective and full-batch training.
//!
//! The objective is `L = L_global + λ · L_local`: a class-weighted binary
//! cross-entropy on the head's predictions plus a margin contrastive term
//! over sampled minority pairs in embedding space. Both terms backpropagate
//! through the same network; parameters are updated with Adam.

mod loss;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::DataError;
use crate::gnn::{backward, forward, GnnError, GnnModel, Gradients};
use crate::graph::SampleGraph;
use crate::linalg::Matrix;
use crate::seed::derive_seed;

pub use loss::{
    class_weights, contrastive_from_pairs, global_loss, global_loss_with_grad, local_contrastive_loss, sample_pairs,
    total_loss, ClassWeighting, LossBreakdown, PairSample,
};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] GnnError),
    #[error("length mismatch: {predictions} predictions, {labels} labels, {weights} weights")]
    LengthMismatch {
        predictions: usize,
        labels: usize,
        weights: usize,
    },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("non-finite loss or parameters at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub lambda: f64,
    pub beta: f64,
    pub margin: f64,
    pub pos_pairs: usize,
    pub neg_pairs: usize,
    pub seed: u64,
    pub clamp_epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 200,
            lambda: 0.5,
            beta: 0.5,
            margin: 1.0,
            pos_pairs: 2,
            neg_pairs: 2,
            seed: 42,
            clamp_epsilon: 1e-7,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::InvalidConfig(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return bad(format!("beta must lie in (0, 1], got {}", self.beta));
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return bad(format!("margin must be positive, got {}", self.margin));
        }
        if self.pos_pairs == 0 || self.neg_pairs == 0 {
            return bad("pair counts must be at least 1".into());
        }
        if !(self.clamp_epsilon > 0.0 && self.clamp_epsilon <= 1e-3) {
            return bad(format!("clamp_epsilon must lie in (0, 1e-3], got {}", self.clamp_epsilon));
        }
        Ok(())
    }

    /// Seed for the contrastive pair draw of a given epoch.
    pub fn pair_seed(&self, epoch: usize) -> u64 {
        derive_seed(self.seed, "local_pairs", epoch as u64)
    }
}

/// One evaluation of the full objective and its parameter gradients.
#[derive(Debug, Clone)]
pub struct ObjectiveEval {
    pub loss: LossBreakdown,
    pub gradients: Gradients,
}

/// Forward pass, both loss terms, and backward pass. `pair_seed` fixes the
/// contrastive pair draw so repeated calls see the same objective.
pub fn evaluate_objective(
    model: &GnnModel,
    graph: &SampleGraph,
    features: &Matrix,
    labels: &[u8],
    sample_weights: &[f64],
    config: &TrainConfig,
    pair_seed: u64,
) -> Result<ObjectiveEval, TrainError> {
    let trace = forward(model, graph, features)?;
    let (global, d_pred) =
        global_loss_with_grad(&trace.predictions, labels, sample_weights, config.clamp_epsilon)?;
    let (local, mut d_emb) = local_contrastive_loss(
        trace.embeddings(),
        labels,
        config.margin,
        config.pos_pairs,
        config.neg_pairs,
        pair_seed,
    )?;
    for g in d_emb.as_mut_slice() {
        *g *= config.lambda;
    }
    let loss = total_loss(global, local, config.lambda);
    let gradients = backward(model, graph, &trace, &d_pred, &d_emb)?;
    Ok(ObjectiveEval { loss, gradients })
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    pub fn update(&mut self, model: &mut GnnModel, grads: &Gradients) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step);
        let bc2 = 1.0 - self.beta2.powi(self.step);
        let mut k = 0;
        for (params, g) in model.parameter_slices_mut().into_iter().zip(grads.slices()) {
            for (p, &g) in params.iter_mut().zip(g) {
                self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g;
                self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g;
                let m_hat = self.m[k] / bc1;
                let v_hat = self.v[k] / bc2;
                *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
                k += 1;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainHistory {
    /// Loss measured before each epoch's update; `epoch` is 1-based.
    pub losses: Vec<LossBreakdown>,
    pub model: GnnModel,
    pub epoch_wall: Vec<Duration>,
    pub weighting: ClassWeighting,
}

impl TrainHistory {
    /// `epoch,total,global,local` lines.
    pub fn log_lines(&self) -> impl Iterator<Item = String> + '_ {
        use crate::data::format_f64;
        self.losses.iter().map(|l| {
            format!(
                "{},{},{},{}",
                l.epoch,
                format_f64(l.total),
                format_f64(l.global),
                format_f64(l.local)
            )
        })
    }
}

/// Runs exactly `config.epochs` full-batch Adam updates.
pub fn train(
    model: GnnModel,
    graph: &SampleGraph,
    features: &Matrix,
    labels: &[u8],
    config: &TrainConfig,
) -> Result<TrainHistory, TrainError> {
    config.validate()?;
    let (weighting, sample_weights) = class_weights(labels, config.beta)?;
    let mut model = model;
    let mut adam = Adam::new(model.n_parameters(), config.learning_rate);
    let mut losses = Vec::with_capacity(config.epochs);
    let mut epoch_wall = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let started = Instant::now();
        let eval = evaluate_objective(
            &model,
            graph,
            features,
            labels,
            &sample_weights,
            config,
            config.pair_seed(epoch),
        )?;
        let mut loss = eval.loss;
        loss.epoch = epoch;
        if !loss.total.is_finite() || !eval.gradients.is_finite() {
            return Err(TrainError::NonFiniteLoss { epoch });
        }
        adam.update(&mut model, &eval.gradients);
        if !model.is_finite() {
            return Err(TrainError::NonFiniteLoss { epoch });
        }
        losses.push(loss);
        epoch_wall.push(started.elapsed());
    }
    Ok(TrainHistory {
        losses,
        model,
        epoch_wall,
        weighting,
    })
}

/// Layer-2 outputs of a fresh forward pass.
pub fn extract_embeddings(model: &GnnModel, graph: &SampleGraph, features: &Matrix) -> Result<Matrix, TrainError> {
    Ok(forward(model, graph, features)?.z2)
}
