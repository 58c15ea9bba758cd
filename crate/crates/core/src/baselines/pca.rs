//! Classical PCA through a cyclic Jacobi eigensolver on the population
//! covariance matrix.

use thiserror::Error;

use crate::linalg::Matrix;

#[derive(Debug, Error, PartialEq)]
pub enum PcaError {
    #[error("requested rank {requested} but data has {available} dimensions")]
    RankRequestTooLarge { requested: usize, available: usize },
    #[error("rank must be at least 1")]
    ZeroRank,
    #[error("PCA needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("dimension mismatch: model has {expected} inputs, matrix has {got} columns")]
    DimensionMismatch { expected: usize, got: usize },
}

const MAX_SWEEPS: usize = 100;
const OFF_DIAGONAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `r × d`, orthonormal rows, ordered by eigenvalue.
    pub components: Matrix,
    pub eigenvalues: Vec<f64>,
}

/// Eigen-decomposition of a symmetric matrix. Returns eigenvalues and the
/// matrix whose columns are the matching eigenvectors.
pub fn jacobi_eigen(symmetric: &Matrix) -> (Vec<f64>, Matrix) {
    let n = symmetric.rows();
    let mut a = symmetric.clone();
    let mut v = Matrix::identity(n);
    let scale = a.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= OFF_DIAGONAL_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)]).collect(), v)
}

pub fn column_means(x: &Matrix) -> Vec<f64> {
    let mut mean = vec![0.0; x.cols()];
    for r in 0..x.rows() {
        for (m, &v) in mean.iter_mut().zip(x.row(r)) {
            *m += v;
        }
    }
    let n = x.rows() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

fn centered(x: &Matrix, mean: &[f64]) -> Matrix {
    let mut c = x.clone();
    for r in 0..c.rows() {
        for (v, m) in c.row_mut(r).iter_mut().zip(mean) {
            *v -= m;
        }
    }
    c
}

/// Population covariance (divides by N).
pub fn covariance(x: &Matrix) -> Matrix {
    let c = centered(x, &column_means(x));
    let mut cov = c.transpose_matmul(&c);
    let n = x.rows() as f64;
    cov.as_mut_slice().iter_mut().for_each(|v| *v /= n);
    // Exact symmetry for the solver.
    for i in 0..cov.rows() {
        for j in i + 1..cov.cols() {
            cov[(j, i)] = cov[(i, j)];
        }
    }
    cov
}

pub fn pca_fit(x: &Matrix, rank: usize) -> Result<PcaModel, PcaError> {
    let d = x.cols();
    if rank == 0 {
        return Err(PcaError::ZeroRank);
    }
    if rank > d {
        return Err(PcaError::RankRequestTooLarge {
            requested: rank,
            available: d,
        });
    }
    if x.rows() < 2 {
        return Err(PcaError::TooFewRows(x.rows()));
    }
    let mean = column_means(x);
    let (values, vectors) = jacobi_eigen(&covariance(x));

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut components = Matrix::zeros(rank, d);
    let mut eigenvalues = Vec::with_capacity(rank);
    for (r, &idx) in order.iter().take(rank).enumerate() {
        let mut comp = vectors.column(idx);
        // Largest-magnitude entry positive (first on ties).
        let pivot = comp
            .iter()
            .enumerate()
            .fold(0, |best, (i, v)| if v.abs() > comp[best].abs() { i } else { best });
        if comp[pivot] < 0.0 {
            comp.iter_mut().for_each(|v| *v = -*v);
        }
        components.row_mut(r).copy_from_slice(&comp);
        eigenvalues.push(values[idx].max(0.0));
    }
    Ok(PcaModel {
        mean,
        components,
        eigenvalues,
    })
}

/// `(x − mean) · componentsᵀ`.
pub fn pca_transform(model: &PcaModel, x: &Matrix) -> Result<Matrix, PcaError> {
    if x.cols() != model.mean.len() {
        return Err(PcaError::DimensionMismatch {
            expected: model.mean.len(),
            got: x.cols(),
        });
    }
    Ok(centered(x, &model.mean).matmul_transpose(&model.components))
}

/// `scores · components + mean`.
pub fn pca_reconstruct(model: &PcaModel, scores: &Matrix) -> Matrix {
    let mut out = scores.matmul(&model.components);
    for r in 0..out.rows() {
        for (v, m) in out.row_mut(r).iter_mut().zip(&model.mean) {
            *v += m;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_line() {
        let x = Matrix::from_rows(&[vec![-2.0, -2.0], vec![-1.0, -1.0], vec![0.5, 0.5], vec![3.0, 3.0]]);
        let m = pca_fit(&x, 2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((m.components[(0, 0)] - h).abs() < 1e-12 && (m.components[(0, 1)] - h).abs() < 1e-12);
        assert!(m.eigenvalues[1].abs() < 1e-12);
    }

    #[test]
    fn axis_aligned_variances() {
        // x ∈ {±2}, y ∈ {±1} in all combinations: variances 4 and 1.
        let x = Matrix::from_rows(&[vec![2.0, 1.0], vec![2.0, -1.0], vec![-2.0, 1.0], vec![-2.0, -1.0]]);
        let m = pca_fit(&x, 2).unwrap();
        assert_eq!(m.eigenvalues, vec![4.0, 1.0]);
        assert_eq!(m.components, Matrix::identity(2));
    }

    #[test]
    fn mean_row_maps_to_origin() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0, 0.0], vec![3.0, -1.0, 1.0], vec![0.0, 0.5, 4.0]]);
        let m = pca_fit(&x, 2).unwrap();
        let s = pca_transform(&m, &Matrix::from_rows(std::slice::from_ref(&m.mean))).unwrap();
        assert!(s.as_slice().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn rank_one_scores_are_signed_distances() {
        let dir = [0.6, 0.8];
        let ts = [-1.5, 0.0, 0.5, 1.0];
        let rows: Vec<Vec<f64>> = ts.iter().map(|t| vec![1.0 + t * dir[0], -2.0 + t * dir[1]]).collect();
        let x = Matrix::from_rows(&rows);
        let m = pca_fit(&x, 1).unwrap();
        let s = pca_transform(&m, &x).unwrap();
        let mean_t = ts.iter().sum::<f64>() / 4.0;
        for (i, t) in ts.iter().enumerate() {
            assert!((s[(i, 0)] - (t - mean_t)).abs() < 1e-12);
        }
    }

    #[test]
    fn errors() {
        let x = Matrix::zeros(3, 2);
        assert_eq!(
            pca_fit(&x, 3).unwrap_err(),
            PcaError::RankRequestTooLarge { requested: 3, available: 2 }
        );
        assert_eq!(pca_fit(&Matrix::zeros(1, 2), 1).unwrap_err(), PcaError::TooFewRows(1));
        let m = pca_fit(&Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]), 1).unwrap();
        assert!(pca_transform(&m, &Matrix::zeros(2, 3)).is_err());
    }
}
