mod common;

use graphmine::gnn::{backward, forward, init_model, ModelDims};
use graphmine::graph::build_knn_graph;
use graphmine::linalg::Matrix;
use graphmine::trainer::{class_weights, evaluate_objective, TrainConfig};

#[test]
fn combined_loss_matches_finite_differences() {
    for seed in 0..8 {
        let err = common::gradient_check(seed, 1e-5, 1e-12);
        assert!(err <= 1e-4, "seed {seed}: relative error {err:e}");
    }
}

#[test]
fn zero_upstream_gives_zero_gradients() {
    let mut r = common::rng(3);
    let x = common::gaussian_matrix(&mut r, 10, 3);
    let g = build_knn_graph(&x, 2, 1.0).unwrap();
    let model = init_model(ModelDims::new(3, 4, 2).unwrap(), 3);
    let trace = forward(&model, &g, &x).unwrap();
    let grads = backward(&model, &g, &trace, &[0.0; 10], &Matrix::zeros(10, 2)).unwrap();
    assert!(grads.slices().iter().all(|s| s.iter().all(|&v| v == 0.0)));
}

#[test]
fn lambda_scales_local_gradient_only() {
    let mut r = common::rng(11);
    let x = common::gaussian_matrix(&mut r, 20, 5);
    let labels = common::labels_with(&mut r, 20, 5);
    let g = build_knn_graph(&x, 3, 1.0).unwrap();
    let model = init_model(ModelDims::new(5, 6, 4).unwrap(), 11);
    let (_, w) = class_weights(&labels, 0.5).unwrap();
    let at = |lambda: f64| {
        let cfg = TrainConfig { lambda, ..TrainConfig::default() };
        evaluate_objective(&model, &g, &x, &labels, &w, &cfg, 9).unwrap()
    };
    let (e0, e1, e2) = (at(0.0), at(1.0), at(2.0));
    assert_eq!(e0.loss.total, e0.loss.global);
    assert_eq!(e1.loss.local, e2.loss.local);
    // Gradients are linear in lambda.
    for ((a, b), c) in e0.gradients.slices().iter().zip(e1.gradients.slices()).zip(e2.gradients.slices()) {
        for ((g0, g1), g2) in a.iter().zip(b.iter()).zip(c.iter()) {
            let predicted = 2.0 * g1 - g0;
            assert!((predicted - g2).abs() <= 1e-12 * (1.0 + g2.abs()));
        }
    }
}
