mod common;

use graphmine::gnn::{forward, init_model, ModelDims};
use graphmine::graph::{build_complete_graph, build_graph, build_knn_graph, GraphConfig, GraphMethod, SigmaMode};
use graphmine::linalg::Matrix;
use proptest::prelude::*;

fn config(method: GraphMethod, k: usize) -> GraphConfig {
    GraphConfig {
        method,
        k,
        ..GraphConfig::default()
    }
}

fn permute_rows(x: &Matrix, perm: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(x.rows(), x.cols());
    for (i, &p) in perm.iter().enumerate() {
        out.row_mut(p).copy_from_slice(x.row(i));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn constructors_satisfy_invariants(seed in any::<u64>(), n in 3usize..40, d in 1usize..6, k in 1usize..6) {
        let mut r = common::rng(seed);
        let x = common::gaussian_matrix(&mut r, n, d);
        let ds = common::dataset(x, common::labels_with(&mut r, n, 1));
        for method in GraphMethod::ALL {
            let g = build_graph(&ds, &config(method, k.min(n - 1)), seed).unwrap();
            prop_assert_eq!(g.method(), method);
            if let Err(msg) = common::check_graph_invariants(&g) {
                prop_assert!(false, "{}: {}", method, msg);
            }
        }
    }

    #[test]
    fn knn_with_all_neighbours_is_complete(seed in any::<u64>(), n in 2usize..30, sigma in 0.1f64..5.0) {
        let mut r = common::rng(seed);
        let x = common::gaussian_matrix(&mut r, n, 3);
        let knn = build_knn_graph(&x, n - 1, sigma).unwrap();
        let complete = build_complete_graph(&x, sigma).unwrap();
        prop_assert!(common::graphs_match(&knn, &complete, 0.0));
        prop_assert_eq!(complete.n_undirected_edges(), n * (n - 1) / 2);
    }

    #[test]
    fn knn_degree_at_least_k(seed in any::<u64>(), n in 3usize..40, k in 1usize..8) {
        let mut r = common::rng(seed);
        let x = common::gaussian_matrix(&mut r, n, 4);
        let k = k.min(n - 1);
        let g = build_knn_graph(&x, k, 1.0).unwrap();
        prop_assert!((0..n).all(|i| g.degree(i) >= k));
    }

    #[test]
    fn gaussian_weight_monotone_in_distance(seed in any::<u64>(), sigma in 0.05f64..10.0) {
        use graphmine::graph::gaussian_similarity;
        let mut r = common::rng(seed);
        let x = common::gaussian_matrix(&mut r, 3, 4);
        let d = |j: usize| graphmine::linalg::euclidean_distance(x.row(0), x.row(j));
        let w = |j: usize| gaussian_similarity(x.row(0), x.row(j), sigma).unwrap();
        if d(1) < d(2) {
            prop_assert!(w(1) >= w(2));
        } else if d(2) < d(1) {
            prop_assert!(w(2) >= w(1));
        }
    }

    #[test]
    fn construction_is_permutation_equivariant(seed in any::<u64>(), n in 3usize..30) {
        let mut r = common::rng(seed);
        let x = common::gaussian_matrix(&mut r, n, 3);
        let mut perm: Vec<usize> = (0..n).collect();
        use rand::seq::SliceRandom;
        perm.shuffle(&mut r);
        let labels = common::labels_with(&mut r, n, 1);
        let mut plabels = vec![0; n];
        for (i, &p) in perm.iter().enumerate() {
            plabels[p] = labels[i];
        }
        let ds = common::dataset(x.clone(), labels);
        let pds = common::dataset(permute_rows(&x, &perm), plabels);
        for method in [GraphMethod::Knn, GraphMethod::Complete, GraphMethod::AdaptiveThreshold] {
            let cfg = GraphConfig { sigma_mode: SigmaMode::Fixed(1.3), ..config(method, 3.min(n - 1)) };
            let g = build_graph(&ds, &cfg, 0).unwrap().permuted(&perm);
            let pg = build_graph(&pds, &cfg, 0).unwrap();
            prop_assert!(common::graphs_match(&g, &pg, 1e-14), "{}", method);
        }
    }

    #[test]
    fn gnn_forward_is_permutation_equivariant(seed in any::<u64>(), n in 3usize..25) {
        let mut r = common::rng(seed);
        let x = common::gaussian_matrix(&mut r, n, 4);
        let mut perm: Vec<usize> = (0..n).collect();
        use rand::seq::SliceRandom;
        perm.shuffle(&mut r);
        let g = build_knn_graph(&x, 2.min(n - 1), 1.0).unwrap();
        let model = init_model(ModelDims::new(4, 5, 3).unwrap(), seed);
        let out = forward(&model, &g, &x).unwrap();
        let pout = forward(&model, &g.permuted(&perm), &permute_rows(&x, &perm)).unwrap();
        let expected = permute_rows(out.embeddings(), &perm);
        prop_assert!(expected.max_abs_diff(pout.embeddings()) <= 1e-12);
        for (i, &p) in perm.iter().enumerate() {
            prop_assert!((out.predictions[i] - pout.predictions[p]).abs() <= 1e-12);
        }
    }
}

#[test]
fn invariants_hold_at_five_hundred_nodes() {
    let mut r = common::rng(500);
    let x = common::gaussian_matrix(&mut r, 500, 8);
    let ds = common::dataset(x, common::labels_with(&mut r, 500, 25));
    for method in GraphMethod::ALL {
        let g = build_graph(&ds, &config(method, 10), 1).unwrap();
        common::check_graph_invariants(&g).unwrap();
    }
}
