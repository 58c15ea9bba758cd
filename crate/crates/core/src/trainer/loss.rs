use rand::seq::index;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::data::class_partition;
use crate::linalg::{squared_distance, Matrix};
use crate::seed::StageRng;

/// Class weights: `1 / |minority|` for label 1 and `β / |majority|` for
/// label 0, so the minority block sums to 1 and the majority block to β.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeighting {
    pub w_minority: f64,
    pub w_majority: f64,
    pub beta: f64,
    pub n_minority: usize,
    pub n_majority: usize,
}

impl ClassWeighting {
    pub fn weight_for(&self, label: u8) -> f64 {
        if label == 1 {
            self.w_minority
        } else {
            self.w_majority
        }
    }
}

pub fn class_weights(labels: &[u8], beta: f64) -> Result<(ClassWeighting, Vec<f64>), TrainError> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(TrainError::InvalidConfig(format!("beta must lie in (0, 1], got {beta}")));
    }
    let part = class_partition(labels)?;
    let n_minority = part.minority.len();
    let n_majority = part.majority.len();
    let cw = ClassWeighting {
        w_minority: 1.0 / n_minority as f64,
        w_majority: beta / n_majority as f64,
        beta,
        n_minority,
        n_majority,
    };
    let per_sample = labels.iter().map(|&l| cw.weight_for(l)).collect();
    Ok((cw, per_sample))
}

fn check_lengths(predictions: &[f64], labels: &[u8], weights: &[f64]) -> Result<(), TrainError> {
    if predictions.len() != labels.len() || weights.len() != labels.len() {
        return Err(TrainError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
            weights: weights.len(),
        });
    }
    Ok(())
}

/// Weighted binary cross-entropy with predictions clamped to `[ε, 1 − ε]`.
pub fn global_loss(predictions: &[f64], labels: &[u8], weights: &[f64], epsilon: f64) -> Result<f64, TrainError> {
    Ok(global_loss_with_grad(predictions, labels, weights, epsilon)?.0)
}

/// Loss and `∂L/∂y′`. The clamp is part of the function, so the gradient
/// is zero wherever a prediction sits outside `[ε, 1 − ε]`.
pub fn global_loss_with_grad(
    predictions: &[f64],
    labels: &[u8],
    weights: &[f64],
    epsilon: f64,
) -> Result<(f64, Vec<f64>), TrainError> {
    check_lengths(predictions, labels, weights)?;
    let mut loss = 0.0;
    let mut grad = vec![0.0; predictions.len()];
    for (i, (&p, (&y, &w))) in predictions.iter().zip(labels.iter().zip(weights)).enumerate() {
        let clamped = p.clamp(epsilon, 1.0 - epsilon);
        let inside = clamped == p;
        if y == 1 {
            loss -= w * clamped.ln();
            if inside {
                grad[i] = -w / clamped;
            }
        } else {
            loss -= w * (1.0 - clamped).ln();
            if inside {
                grad[i] = w / (1.0 - clamped);
            }
        }
    }
    Ok((loss, grad))
}

/// Sampled anchor/partner pairs for the minority contrastive term.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairSample {
    /// Minority anchor, minority partner.
    pub positives: Vec<(usize, usize)>,
    /// Minority anchor, majority partner.
    pub negatives: Vec<(usize, usize)>,
}

/// For each minority anchor (in index order) draws up to `pos_per_anchor`
/// other minority samples and up to `neg_per_anchor` majority samples,
/// uniformly without replacement.
pub fn sample_pairs(labels: &[u8], pos_per_anchor: usize, neg_per_anchor: usize, rng: &mut StageRng) -> PairSample {
    let minority: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let majority: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
    let mut out = PairSample::default();
    if minority.len() < 2 {
        return out;
    }
    let n_pos = pos_per_anchor.min(minority.len() - 1);
    let n_neg = neg_per_anchor.min(majority.len());
    for (a, &anchor) in minority.iter().enumerate() {
        // Draw from the minority list with the anchor's slot removed.
        for k in index::sample(rng, minority.len() - 1, n_pos) {
            let partner = minority[if k >= a { k + 1 } else { k }];
            out.positives.push((anchor, partner));
        }
        for k in index::sample(rng, majority.len(), n_neg) {
            out.negatives.push((anchor, majority[k]));
        }
    }
    out
}

/// `mean_pos D² + mean_neg max(0, m − D)²` with `D = ‖E_i − E_j‖₂`,
/// plus its gradient with respect to the embeddings. An empty pair list
/// contributes zero.
pub fn contrastive_from_pairs(embeddings: &Matrix, pairs: &PairSample, margin: f64) -> (f64, Matrix) {
    let mut grad = Matrix::zeros(embeddings.rows(), embeddings.cols());
    let mut add_scaled = |i: usize, j: usize, scale: f64| {
        for c in 0..embeddings.cols() {
            let diff = embeddings[(i, c)] - embeddings[(j, c)];
            grad[(i, c)] += scale * diff;
            grad[(j, c)] -= scale * diff;
        }
    };

    let mut pos = 0.0;
    if !pairs.positives.is_empty() {
        let inv = 1.0 / pairs.positives.len() as f64;
        for &(i, j) in &pairs.positives {
            pos += squared_distance(embeddings.row(i), embeddings.row(j));
            add_scaled(i, j, 2.0 * inv);
        }
        pos *= inv;
    }

    let mut neg = 0.0;
    if !pairs.negatives.is_empty() {
        let inv = 1.0 / pairs.negatives.len() as f64;
        for &(i, j) in &pairs.negatives {
            let dist = squared_distance(embeddings.row(i), embeddings.row(j)).sqrt();
            let hinge = (margin - dist).max(0.0);
            neg += hinge * hinge;
            // d/dE_i of hinge² = -2 hinge (E_i − E_j) / D; zero at D = 0.
            if hinge > 0.0 && dist > 0.0 {
                add_scaled(i, j, -2.0 * hinge * inv / dist);
            }
        }
        neg *= inv;
    }
    (pos + neg, grad)
}

/// Samples pairs from `seed` and evaluates the contrastive term. With fewer
/// than two minority samples the term is defined as zero.
pub fn local_contrastive_loss(
    embeddings: &Matrix,
    labels: &[u8],
    margin: f64,
    pos_per_anchor: usize,
    neg_per_anchor: usize,
    seed: u64,
) -> Result<(f64, Matrix), TrainError> {
    if embeddings.rows() != labels.len() {
        return Err(TrainError::LengthMismatch {
            predictions: embeddings.rows(),
            labels: labels.len(),
            weights: labels.len(),
        });
    }
    if margin.is_nan() || margin <= 0.0 {
        return Err(TrainError::InvalidConfig(format!("margin must be positive, got {margin}")));
    }
    let n_minority = labels.iter().filter(|&&l| l == 1).count();
    if n_minority < 2 {
        log::warn!("{n_minority} minority sample(s): local contrastive term is zero");
        return Ok((0.0, Matrix::zeros(embeddings.rows(), embeddings.cols())));
    }
    let mut rng = StageRng::seed_from_u64(seed);
    let pairs = sample_pairs(labels, pos_per_anchor.max(1), neg_per_anchor.max(1), &mut rng);
    Ok(contrastive_from_pairs(embeddings, &pairs, margin))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub global: f64,
    pub local: f64,
    pub epoch: usize,
}

pub fn total_loss(global: f64, local: f64, lambda: f64) -> LossBreakdown {
    LossBreakdown {
        total: global + lambda * local,
        global,
        local,
        epoch: 0,
    }
}
