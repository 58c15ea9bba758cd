#![allow(dead_code)]

use graphmine::data::{Dataset, Provenance};
use graphmine::discretize::TransactionDb;
use graphmine::gnn::{init_model, ModelDims};
use graphmine::graph::{build_knn_graph, median_bandwidth};
use graphmine::linalg::Matrix;
use graphmine::trainer::{class_weights, evaluate_objective, TrainConfig};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect())
}

/// Labels with exactly `n_minority` ones at random positions.
pub fn labels_with(rng: &mut ChaCha8Rng, n: usize, n_minority: usize) -> Vec<u8> {
    let mut labels = vec![0u8; n];
    for i in rand::seq::index::sample(rng, n, n_minority) {
        labels[i] = 1;
    }
    labels
}

pub fn dataset(x: Matrix, labels: Vec<u8>) -> Dataset {
    let names = (0..x.cols()).map(|j| format!("f{j}")).collect();
    Dataset::new(x, labels, names, Provenance::Derived("test".into())).unwrap()
}

/// Random database over `n_items` items; label 1 with probability 0.4.
pub fn random_db(rng: &mut ChaCha8Rng, n_items: usize, n_tx: usize, density: f64) -> TransactionDb {
    let mut tx = Vec::with_capacity(n_tx);
    let mut labels = Vec::with_capacity(n_tx);
    for _ in 0..n_tx {
        tx.push((0..n_items as u32).filter(|_| rng.random_bool(density)).collect());
        labels.push(u8::from(rng.random_bool(0.4)));
    }
    if !labels.contains(&1) {
        labels[0] = 1;
    }
    TransactionDb::from_itemsets(tx, labels, n_items)
}

/// Largest relative gap between analytic and central-difference gradients
/// of the combined loss on a random instance (N=20, d=5, hidden 6,
/// embedding 4, KNN k=3). The denominator is floored at `floor`.
pub fn gradient_check(seed: u64, step: f64, floor: f64) -> f64 {
    let mut r = rng(seed);
    let (n, d) = (20, 5);
    let x = gaussian_matrix(&mut r, n, d);
    let n_min = r.random_range(3..=7);
    let labels = labels_with(&mut r, n, n_min);
    let sigma = median_bandwidth(&x, 1000, seed).unwrap();
    let graph = build_knn_graph(&x, 3, sigma).unwrap();
    let mut model = init_model(ModelDims::new(d, 6, 4).unwrap(), seed);
    let config = TrainConfig {
        seed,
        ..TrainConfig::default()
    };
    let (_, weights) = class_weights(&labels, config.beta).unwrap();
    let pair_seed = config.pair_seed(1);
    let eval = evaluate_objective(&model, &graph, &x, &labels, &weights, &config, pair_seed).unwrap();
    let analytic: Vec<Vec<f64>> = eval.gradients.slices().iter().map(|s| s.to_vec()).collect();

    let mut worst: f64 = 0.0;
    for (block, grads) in analytic.iter().enumerate() {
        for (idx, &a) in grads.iter().enumerate() {
            let orig = model.parameter_slices()[block][idx];
            let mut loss_at = |v: f64| {
                model.parameter_slices_mut()[block][idx] = v;
                evaluate_objective(&model, &graph, &x, &labels, &weights, &config, pair_seed)
                    .unwrap()
                    .loss
                    .total
            };
            let numeric = (loss_at(orig + step) - loss_at(orig - step)) / (2.0 * step);
            model.parameter_slices_mut()[block][idx] = orig;
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
            worst = worst.max(rel);
        }
    }
    worst
}

pub fn exact(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite")
}

pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Half a unit in the last place of `v`, exactly.
pub fn half_ulp(v: f64) -> BigRational {
    let next = f64::from_bits(v.to_bits() + 1);
    (exact(next) - exact(v)) / BigInt::from(2)
}

/// Symmetric raw weights, unit self-loops, weights in (0, 1], and
/// normalized rows summing to 1 within 1e-12.
pub fn check_graph_invariants(g: &graphmine::graph::SampleGraph) -> Result<(), String> {
    for i in 0..g.n_nodes() {
        if g.raw_weight(i, i) != Some(1.0) {
            return Err(format!("node {i}: self-loop weight {:?}", g.raw_weight(i, i)));
        }
        let mut sum = 0.0;
        for e in g.neighbors(i) {
            if !(e.raw_weight > 0.0 && e.raw_weight <= 1.0) {
                return Err(format!("edge {i}-{}: raw weight {}", e.neighbor, e.raw_weight));
            }
            if g.raw_weight(e.neighbor, i) != Some(e.raw_weight) {
                return Err(format!("edge {i}-{} not symmetric", e.neighbor));
            }
            sum += e.norm_weight;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(format!("node {i}: normalized sum {sum}"));
        }
    }
    Ok(())
}

/// Same edge sets and raw weights; normalized weights within `tol`.
pub fn graphs_match(a: &graphmine::graph::SampleGraph, b: &graphmine::graph::SampleGraph, tol: f64) -> bool {
    a.n_nodes() == b.n_nodes()
        && (0..a.n_nodes()).all(|i| {
            let (x, y) = (a.neighbors(i), b.neighbors(i));
            x.len() == y.len()
                && x.iter().zip(y).all(|(p, q)| {
                    p.neighbor == q.neighbor
                        && p.raw_weight == q.raw_weight
                        && (p.norm_weight - q.norm_weight).abs() <= tol
                })
        })
}

/// `|a - b| <= tol`, exactly.
pub fn within(a: &BigRational, b: &BigRational, tol: &BigRational) -> bool {
    let diff = a - b;
    &diff <= tol && -diff <= *tol
}
