//! Two-layer weighted graph convolution network with a logistic head.
//!
//! Layer update: `h_i' = act(W · Σ_j α_ij h_j + b)` where `α_ij` are the
//! graph's row-stochastic weights. Aggregation happens before the affine
//! map, which is the same thing by linearity and needs one matrix product.
//! Layer 1 uses ReLU, layer 2 is linear and its output is the embedding.
//! The head maps each embedding to a probability with `sigmoid(w·e + b)`.

mod checkpoint;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::SampleGraph;
use crate::linalg::Matrix;
use crate::seed::stage_rng;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CheckpointError};

#[derive(Debug, Error, PartialEq)]
pub enum GnnError {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("model dimensions must all be at least 1")]
    InvalidDims,
}

fn expect_dim(what: &'static str, expected: usize, got: usize) -> Result<(), GnnError> {
    if expected == got {
        Ok(())
    } else {
        Err(GnnError::DimensionMismatch { what, expected, got })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub embedding_dim: usize,
}

impl ModelDims {
    pub fn new(input_dim: usize, hidden_dim: usize, embedding_dim: usize) -> Result<Self, GnnError> {
        if input_dim == 0 || hidden_dim == 0 || embedding_dim == 0 {
            return Err(GnnError::InvalidDims);
        }
        Ok(Self {
            input_dim,
            hidden_dim,
            embedding_dim,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphLayer {
    /// `out × in`.
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl GraphLayer {
    fn glorot(fan_in: usize, fan_out: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let data = (0..fan_in * fan_out).map(|_| rng.random_range(-a..=a)).collect();
        Self {
            weight: Matrix::from_vec(fan_out, fan_in, data),
            bias: vec![0.0; fan_out],
            activation,
        }
    }

    /// `z = agg · Wᵀ + b`.
    fn affine(&self, agg: &Matrix) -> Matrix {
        let mut z = agg.matmul_transpose(&self.weight);
        for r in 0..z.rows() {
            for (v, b) in z.row_mut(r).iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnModel {
    pub layer1: GraphLayer,
    pub layer2: GraphLayer,
    pub head_weight: Vec<f64>,
    pub head_bias: f64,
    pub dims: ModelDims,
    pub init_seed: u64,
}

/// Glorot-uniform weights, zero biases.
pub fn init_model(dims: ModelDims, seed: u64) -> GnnModel {
    let mut rng = stage_rng(seed, "init_model", 0);
    let layer1 = GraphLayer::glorot(dims.input_dim, dims.hidden_dim, Activation::Relu, &mut rng);
    let layer2 = GraphLayer::glorot(dims.hidden_dim, dims.embedding_dim, Activation::Identity, &mut rng);
    let a = (6.0 / (dims.embedding_dim + 1) as f64).sqrt();
    let head_weight = (0..dims.embedding_dim).map(|_| rng.random_range(-a..=a)).collect();
    GnnModel {
        layer1,
        layer2,
        head_weight,
        head_bias: 0.0,
        dims,
        init_seed: seed,
    }
}

impl GnnModel {
    pub fn n_parameters(&self) -> usize {
        self.parameter_slices().iter().map(|s| s.len()).sum()
    }

    /// Parameters in canonical order: W1, b1, W2, b2, head weight, head bias.
    pub fn parameter_slices(&self) -> [&[f64]; 6] {
        [
            self.layer1.weight.as_slice(),
            &self.layer1.bias,
            self.layer2.weight.as_slice(),
            &self.layer2.bias,
            &self.head_weight,
            std::slice::from_ref(&self.head_bias),
        ]
    }

    pub fn parameter_slices_mut(&mut self) -> [&mut [f64]; 6] {
        [
            self.layer1.weight.as_mut_slice(),
            &mut self.layer1.bias,
            self.layer2.weight.as_mut_slice(),
            &mut self.layer2.bias,
            &mut self.head_weight,
            std::slice::from_mut(&mut self.head_bias),
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.parameter_slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    /// Checks parameter shapes against `dims`.
    pub fn validate(&self) -> Result<(), GnnError> {
        let d = self.dims;
        expect_dim("W1 rows", d.hidden_dim, self.layer1.weight.rows())?;
        expect_dim("W1 cols", d.input_dim, self.layer1.weight.cols())?;
        expect_dim("b1", d.hidden_dim, self.layer1.bias.len())?;
        expect_dim("W2 rows", d.embedding_dim, self.layer2.weight.rows())?;
        expect_dim("W2 cols", d.hidden_dim, self.layer2.weight.cols())?;
        expect_dim("b2", d.embedding_dim, self.layer2.bias.len())?;
        expect_dim("head weight", d.embedding_dim, self.head_weight.len())
    }
}

/// `out_i = Σ_j α_ij h_j`, neighbours visited in index order.
pub fn aggregate(graph: &SampleGraph, h: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(h.rows(), h.cols());
    for i in 0..graph.n_nodes() {
        let row = out.row_mut(i);
        for e in graph.neighbors(i) {
            for (o, &v) in row.iter_mut().zip(h.row(e.neighbor)) {
                *o += e.norm_weight * v;
            }
        }
    }
    out
}

/// Adjoint of [`aggregate`]: `out_j = Σ_i α_ij g_i`.
pub fn aggregate_transpose(graph: &SampleGraph, g: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(g.rows(), g.cols());
    for i in 0..graph.n_nodes() {
        for e in graph.neighbors(i) {
            let src = g.row(i);
            let dst = out.row_mut(e.neighbor);
            for (o, &v) in dst.iter_mut().zip(src) {
                *o += e.norm_weight * v;
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub agg1: Matrix,
    pub z1: Matrix,
    pub h1: Matrix,
    pub agg2: Matrix,
    /// Embeddings, `N × k`.
    pub z2: Matrix,
    pub logits: Vec<f64>,
    pub predictions: Vec<f64>,
}

impl ForwardTrace {
    pub fn embeddings(&self) -> &Matrix {
        &self.z2
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn forward(model: &GnnModel, graph: &SampleGraph, features: &Matrix) -> Result<ForwardTrace, GnnError> {
    model.validate()?;
    expect_dim("graph nodes", features.rows(), graph.n_nodes())?;
    expect_dim("input features", model.dims.input_dim, features.cols())?;

    let agg1 = aggregate(graph, features);
    let z1 = model.layer1.affine(&agg1);
    let mut h1 = z1.clone();
    for v in h1.as_mut_slice() {
        *v = model.layer1.activation.apply(*v);
    }
    let agg2 = aggregate(graph, &h1);
    let mut z2 = model.layer2.affine(&agg2);
    for v in z2.as_mut_slice() {
        *v = model.layer2.activation.apply(*v);
    }
    let logits: Vec<f64> = (0..z2.rows())
        .map(|r| crate::linalg::dot(z2.row(r), &model.head_weight) + model.head_bias)
        .collect();
    let predictions = logits.iter().map(|&l| sigmoid(l)).collect();
    Ok(ForwardTrace {
        agg1,
        z1,
        h1,
        agg2,
        z2,
        logits,
        predictions,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
    pub head_weight: Vec<f64>,
    pub head_bias: f64,
    /// Total gradient reaching the embeddings (local term plus head).
    pub embeddings: Matrix,
}

impl Gradients {
    /// Same order as [`GnnModel::parameter_slices`].
    pub fn slices(&self) -> [&[f64]; 6] {
        [
            self.w1.as_slice(),
            &self.b1,
            self.w2.as_slice(),
            &self.b2,
            &self.head_weight,
            std::slice::from_ref(&self.head_bias),
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite())) && self.embeddings.is_finite()
    }
}

fn column_sums(m: &Matrix) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    for r in 0..m.rows() {
        for (o, &v) in out.iter_mut().zip(m.row(r)) {
            *o += v;
        }
    }
    out
}

/// Reverse-mode pass. `d_predictions` is `∂L/∂y′` per node and
/// `d_embeddings` is the direct `∂L/∂E` from losses defined on embeddings.
pub fn backward(
    model: &GnnModel,
    graph: &SampleGraph,
    trace: &ForwardTrace,
    d_predictions: &[f64],
    d_embeddings: &Matrix,
) -> Result<Gradients, GnnError> {
    let n = trace.z2.rows();
    expect_dim("prediction gradient", n, d_predictions.len())?;
    expect_dim("embedding gradient rows", n, d_embeddings.rows())?;
    expect_dim("embedding gradient cols", model.dims.embedding_dim, d_embeddings.cols())?;
    expect_dim("graph nodes", n, graph.n_nodes())?;

    let d_logits: Vec<f64> = d_predictions
        .iter()
        .zip(&trace.predictions)
        .map(|(&g, &p)| g * p * (1.0 - p))
        .collect();

    let k = model.dims.embedding_dim;
    let mut head_weight = vec![0.0; k];
    let mut head_bias = 0.0;
    let mut d_out2 = d_embeddings.clone();
    for (i, &dl) in d_logits.iter().enumerate() {
        head_bias += dl;
        let e = trace.z2.row(i);
        for (g, &v) in head_weight.iter_mut().zip(e) {
            *g += dl * v;
        }
        for (g, &w) in d_out2.row_mut(i).iter_mut().zip(&model.head_weight) {
            *g += dl * w;
        }
    }
    let embeddings = d_out2.clone();

    // Layer 2 (activation applied to z2 in place; identity by default).
    let mut d_z2 = d_out2;
    if model.layer2.activation != Activation::Identity {
        // The trace stores post-activation z2, recompute the pre-activation.
        let pre = model.layer2.affine(&trace.agg2);
        for (g, &z) in d_z2.as_mut_slice().iter_mut().zip(pre.as_slice()) {
            *g *= model.layer2.activation.derivative(z);
        }
    }
    let w2 = d_z2.transpose_matmul(&trace.agg2);
    let b2 = column_sums(&d_z2);
    let d_agg2 = d_z2.matmul(&model.layer2.weight);
    let d_h1 = aggregate_transpose(graph, &d_agg2);

    // Layer 1.
    let mut d_z1 = d_h1;
    for (g, &z) in d_z1.as_mut_slice().iter_mut().zip(trace.z1.as_slice()) {
        *g *= model.layer1.activation.derivative(z);
    }
    let w1 = d_z1.transpose_matmul(&trace.agg1);
    let b1 = column_sums(&d_z1);

    Ok(Gradients {
        w1,
        b1,
        w2,
        b2,
        head_weight,
        head_bias,
        embeddings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_complete_graph, build_knn_graph};

    fn identity_model(d: usize) -> GnnModel {
        let dims = ModelDims::new(d, d, d).unwrap();
        GnnModel {
            layer1: GraphLayer {
                weight: Matrix::identity(d),
                bias: vec![0.0; d],
                activation: Activation::Identity,
            },
            layer2: GraphLayer {
                weight: Matrix::identity(d),
                bias: vec![0.0; d],
                activation: Activation::Identity,
            },
            head_weight: vec![0.0; d],
            head_bias: 0.0,
            dims,
            init_seed: 0,
        }
    }

    #[test]
    fn init_contract() {
        let dims = ModelDims::new(5, 8, 4).unwrap();
        let a = init_model(dims, 11);
        assert_eq!(a, init_model(dims, 11));
        assert_ne!(a, init_model(dims, 12));
        assert_eq!(a.layer1.weight.shape(), (8, 5));
        assert_eq!(a.layer2.weight.shape(), (4, 8));
        assert_eq!(a.head_weight.len(), 4);
        assert!(a.layer1.bias.iter().chain(&a.layer2.bias).all(|&b| b == 0.0));
        assert_eq!(a.head_bias, 0.0);
        let bound = (6.0f64 / 13.0).sqrt();
        assert!(a.layer1.weight.as_slice().iter().all(|w| w.abs() <= bound));
        assert!(ModelDims::new(0, 1, 1).is_err());
    }

    #[test]
    fn single_node_identity_passthrough() {
        let x = Matrix::from_rows(&[vec![0.5, -2.0, 3.0]]);
        let g = build_complete_graph(&x, 1.0).unwrap();
        let trace = forward(&identity_model(3), &g, &x).unwrap();
        assert_eq!(trace.embeddings(), &x);
    }

    #[test]
    fn two_node_average() {
        // Equal weights with self-loops: α = 0.5 everywhere.
        let x = Matrix::from_rows(&[vec![0.0], vec![2.0]]);
        let g = build_complete_graph(&Matrix::from_rows(&[vec![0.0], vec![0.0]]), 1.0).unwrap();
        assert!(g.neighbors(0).iter().all(|e| e.norm_weight == 0.5));
        let agg = aggregate(&g, &x);
        let layer = GraphLayer {
            weight: Matrix::identity(1),
            bias: vec![0.0],
            activation: Activation::Identity,
        };
        assert_eq!(layer.affine(&agg), Matrix::from_rows(&[vec![1.0], vec![1.0]]));
    }

    #[test]
    fn shapes_and_probabilities() {
        let x = Matrix::from_vec(10, 3, (0..30).map(|v| (v as f64 * 0.37).sin()).collect());
        let g = build_knn_graph(&x, 3, 1.0).unwrap();
        let model = init_model(ModelDims::new(3, 4, 2).unwrap(), 1);
        let t = forward(&model, &g, &x).unwrap();
        assert_eq!(t.z2.shape(), (10, 2));
        assert_eq!(t.predictions.len(), 10);
        assert!(t.predictions.iter().all(|&p| p > 0.0 && p < 1.0));
        assert_eq!(t, forward(&model, &g, &x).unwrap());
        let wrong = Matrix::zeros(10, 4);
        assert!(matches!(forward(&model, &g, &wrong), Err(GnnError::DimensionMismatch { .. })));
    }

    #[test]
    fn zero_upstream_zero_gradients() {
        let x = Matrix::from_vec(6, 2, (0..12).map(|v| (v as f64).cos()).collect());
        let g = build_knn_graph(&x, 2, 1.0).unwrap();
        let model = init_model(ModelDims::new(2, 3, 2).unwrap(), 3);
        let t = forward(&model, &g, &x).unwrap();
        let grads = backward(&model, &g, &t, &[0.0; 6], &Matrix::zeros(6, 2)).unwrap();
        assert!(grads.slices().iter().all(|s| s.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn scalar_chain_rule_base_case() {
        // Single node, identity layers with W2 = 1, b = 0: E = w·x, so
        // dL/dw1 = g·x for an upstream gradient g on E.
        let x = Matrix::from_rows(&[vec![1.5]]);
        let graph = build_complete_graph(&x, 1.0).unwrap();
        let mut model = identity_model(1);
        model.layer1.weight = Matrix::from_rows(&[vec![0.7]]);
        let t = forward(&model, &graph, &x).unwrap();
        assert!((t.z2[(0, 0)] - 1.05).abs() < 1e-15);
        let g = 2.0;
        let grads = backward(&model, &graph, &t, &[0.0], &Matrix::from_rows(&[vec![g]])).unwrap();
        assert_eq!(grads.w1[(0, 0)], g * 1.5);
        assert_eq!(grads.b1[0], g);
    }

    #[test]
    fn constant_features_aggregate_to_constant() {
        let x = Matrix::from_vec(8, 1, (0..8).map(|v| v as f64 * 1.3).collect());
        let g = build_knn_graph(&x, 3, 0.7).unwrap();
        let c = Matrix::from_vec(8, 2, [4.25, -1.0].repeat(8));
        let agg = aggregate(&g, &c);
        for r in 0..8 {
            assert!((agg[(r, 0)] - 4.25).abs() < 1e-12 && (agg[(r, 1)] + 1.0).abs() < 1e-12);
        }
    }
}
