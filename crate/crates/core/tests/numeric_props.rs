mod common;

use graphmine::baselines::{covariance, pca_fit, pca_reconstruct, pca_transform};
use graphmine::data::{read_csv, standardize, write_csv_to, Provenance, StandardizationModel};
use graphmine::discretize::{discretize, fit_quantile_bins};
use graphmine::linalg::Matrix;
use graphmine::trainer::class_weights;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

fn max_orthonormal_error(c: &Matrix) -> f64 {
    let gram = c.matmul_transpose(c);
    gram.max_abs_diff(&Matrix::identity(c.rows()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pca_invariants(seed in any::<u64>(), n in 2usize..40, d in 1usize..8) {
        let mut r = common::rng(seed);
        let x = common::gaussian_matrix(&mut r, n, d);
        let full = pca_fit(&x, d).unwrap();
        prop_assert!(max_orthonormal_error(&full.components) <= 1e-8);
        prop_assert!(full.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(full.eigenvalues.iter().all(|&v| v >= 0.0));
        let cov = covariance(&x);
        let trace: f64 = (0..d).map(|i| cov[(i, i)]).sum();
        prop_assert!((full.eigenvalues.iter().sum::<f64>() - trace).abs() <= 1e-8);
        // Full-rank projection then reconstruction is the identity.
        let scores = pca_transform(&full, &x).unwrap();
        prop_assert!(pca_reconstruct(&full, &scores).max_abs_diff(&x) <= 1e-8);
        // Score variance equals the eigenvalue (population convention).
        for j in 0..d {
            let col = scores.column(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            prop_assert!((var - full.eigenvalues[j]).abs() <= 1e-8);
        }
        // Sign convention.
        for c in 0..d {
            let row = full.components.row(c);
            let pivot = row.iter().enumerate().fold(0, |b, (i, v)| if v.abs() > row[b].abs() { i } else { b });
            prop_assert!(row[pivot] > 0.0);
        }
    }

    #[test]
    fn weight_law_is_exact(seed in any::<u64>(), n in 2usize..400, beta_k in 1u32..=20) {
        let mut r = common::rng(seed);
        let n_min = 1 + (seed as usize % (n - 1));
        let labels = common::labels_with(&mut r, n, n_min);
        let beta = beta_k as f64 / 20.0;
        let (cw, w) = class_weights(&labels, beta).unwrap();
        let n_maj = n - n_min;
        prop_assert_eq!((cw.n_minority, cw.n_majority), (n_min, n_maj));
        // Each stored weight is the closest double to the exact value.
        let exact_min = common::ratio(1, n_min as i64);
        let exact_maj = common::exact(beta) / BigInt::from(n_maj);
        prop_assert!(common::within(&common::exact(cw.w_minority), &exact_min, &common::half_ulp(cw.w_minority)));
        prop_assert!(common::within(&common::exact(cw.w_majority), &exact_maj, &common::half_ulp(cw.w_majority)));
        // The defining rationals sum to 1 and beta exactly.
        let sum_min: BigRational = labels.iter().filter(|&&l| l == 1).map(|_| exact_min.clone()).sum();
        let sum_maj: BigRational = labels.iter().filter(|&&l| l == 0).map(|_| exact_maj.clone()).sum();
        prop_assert_eq!(sum_min, common::ratio(1, 1));
        prop_assert_eq!(sum_maj, common::exact(beta));
        for (wi, &l) in w.iter().zip(&labels) {
            prop_assert_eq!(*wi, cw.weight_for(l));
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact(seed in any::<u64>(), n in 2usize..30, d in 1usize..6, scale_exp in -20i32..20) {
        let mut r = common::rng(seed);
        let mut x = common::gaussian_matrix(&mut r, n, d);
        let scale = 10f64.powi(scale_exp);
        x.as_mut_slice().iter_mut().for_each(|v| *v *= scale);
        let ds = common::dataset(x, common::labels_with(&mut r, n, 1));
        let mut buf = Vec::new();
        write_csv_to(&ds, &mut buf, "Class").unwrap();
        let back = read_csv(buf.as_slice(), "Class", &[], Provenance::Derived("test".into())).unwrap();
        prop_assert_eq!(back.features(), ds.features());
        prop_assert_eq!(back.labels(), ds.labels());
        prop_assert_eq!(back.feature_names(), ds.feature_names());
        prop_assert_eq!(back.digest(), ds.digest());
    }

    #[test]
    fn standardization_moments_and_inverse(seed in any::<u64>(), n in 2usize..50, d in 1usize..6) {
        let mut r = common::rng(seed);
        let x = common::gaussian_matrix(&mut r, n, d);
        let ds = common::dataset(x.clone(), common::labels_with(&mut r, n, 1));
        let (z, model) = standardize(&ds).unwrap();
        for j in 0..d {
            let col = z.features().column(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            prop_assert!(mean.abs() <= 1e-12);
            prop_assert!((var - 1.0).abs() <= 1e-9);
        }
        prop_assert!(model.invert(z.features()).max_abs_diff(&x) <= 1e-12);
        let refit = StandardizationModel::fit(&x);
        prop_assert_eq!(refit.apply(&x), z.features().clone());
    }

    #[test]
    fn binning_is_monotone_and_complete(seed in any::<u64>(), n in 1usize..60, d in 1usize..5, bins in 1usize..8) {
        let mut r = common::rng(seed);
        let x = common::gaussian_matrix(&mut r, n, d);
        let labels = vec![1u8; n];
        let db = discretize(&x, &labels, bins).unwrap();
        let model = fit_quantile_bins(&x, bins).unwrap();
        let vocab = db.vocabulary().unwrap();
        for tx in db.transactions() {
            prop_assert_eq!(tx.len(), d);
            for &item in tx {
                let (dim, bin) = vocab.decode(item);
                prop_assert!(bin < bins);
                prop_assert_eq!(vocab.item_id(dim, bin), item);
            }
        }
        prop_assert!(model.n_items() == d * bins);
        for dim in 0..d {
            let mut pairs: Vec<(f64, u32)> = (0..n).map(|i| (x[(i, dim)], db.transactions()[i][dim])).collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            prop_assert!(pairs.windows(2).all(|w| w[0].1 <= w[1].1));
        }
    }
}

#[test]
fn rank_two_data_is_captured() {
    let mut r = common::rng(2);
    let basis = common::gaussian_matrix(&mut r, 2, 10);
    let coeffs = common::gaussian_matrix(&mut r, 200, 2);
    let x = coeffs.matmul(&basis);
    let m = pca_fit(&x, 10).unwrap();
    let total: f64 = m.eigenvalues.iter().sum();
    assert!((m.eigenvalues[0] + m.eigenvalues[1]) / total >= 0.9999);
}
