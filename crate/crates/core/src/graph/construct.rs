use std::cmp::Ordering;

use rand::seq::index;

use super::{GraphError, GraphMethod, SampleGraph};
use crate::linalg::{euclidean_distance, Matrix};
use crate::seed::stage_rng;

/// `exp(-‖x_i − x_j‖₂ / σ)`.
pub fn gaussian_similarity(x_i: &[f64], x_j: &[f64], sigma: f64) -> Result<f64, GraphError> {
    check_sigma(sigma)?;
    if x_i.len() != x_j.len() {
        return Err(GraphError::LengthMismatch(x_i.len(), x_j.len()));
    }
    Ok(kernel(x_i, x_j, sigma))
}

#[inline]
fn kernel(x_i: &[f64], x_j: &[f64], sigma: f64) -> f64 {
    (-euclidean_distance(x_i, x_j) / sigma).exp()
}

fn check_sigma(sigma: f64) -> Result<(), GraphError> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(GraphError::NonPositiveSigma(sigma))
    }
}

/// Median pairwise Euclidean distance, over a seeded subsample of
/// `sample_cap` rows when there are more. Falls back to the mean of the
/// strictly positive distances when the median is zero.
pub fn median_bandwidth(x: &Matrix, sample_cap: usize, seed: u64) -> Result<f64, GraphError> {
    let n = x.rows();
    if n < 2 {
        return Err(GraphError::TooFewNodes { needed: 2, got: n });
    }
    let rows: Vec<usize> = if n <= sample_cap.max(2) {
        (0..n).collect()
    } else {
        let mut rng = stage_rng(seed, "bandwidth", 0);
        let mut picked = index::sample(&mut rng, n, sample_cap.max(2)).into_vec();
        picked.sort_unstable();
        picked
    };
    let mut dists = Vec::with_capacity(rows.len() * (rows.len() - 1) / 2);
    for (a, &i) in rows.iter().enumerate() {
        for &j in &rows[a + 1..] {
            dists.push(euclidean_distance(x.row(i), x.row(j)));
        }
    }
    let m = dists.len();
    let mid = m / 2;
    let (_, &mut upper, _) = dists.select_nth_unstable_by(mid, f64::total_cmp);
    let median = if m % 2 == 1 {
        upper
    } else {
        let lower = dists[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lower + upper) / 2.0
    };
    if median > 0.0 {
        return Ok(median);
    }
    let positive: Vec<f64> = dists.into_iter().filter(|&d| d > 0.0).collect();
    if positive.is_empty() {
        return Err(GraphError::DegenerateData);
    }
    Ok(positive.iter().sum::<f64>() / positive.len() as f64)
}

fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Each node links to its `k` nearest neighbours (ties to the lower
/// index); the edge set is the union of those directed choices.
pub fn build_knn_graph(x: &Matrix, k: usize, sigma: f64) -> Result<SampleGraph, GraphError> {
    check_sigma(sigma)?;
    let n = x.rows();
    if k == 0 || k + 1 > n {
        return Err(GraphError::InvalidK { k, n });
    }
    let mut neighbors: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut cands: Vec<(f64, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        cands.clear();
        cands.extend((0..n).filter(|&j| j != i).map(|j| (euclidean_distance(x.row(i), x.row(j)), j)));
        if k < cands.len() {
            cands.select_nth_unstable_by(k - 1, by_distance_then_index);
            cands.truncate(k);
        }
        for &(dist, j) in cands.iter() {
            let w = (-dist / sigma).exp();
            if w > 0.0 {
                neighbors[i].push((j, w));
                neighbors[j].push((i, w));
            }
        }
    }
    SampleGraph::from_raw_edges(n, neighbors, GraphMethod::Knn, Some(sigma))
}

pub fn build_complete_graph(x: &Matrix, sigma: f64) -> Result<SampleGraph, GraphError> {
    check_sigma(sigma)?;
    let n = x.rows();
    let mut neighbors: Vec<Vec<(usize, f64)>> = (0..n).map(|_| Vec::with_capacity(n)).collect();
    for i in 0..n {
        for j in i + 1..n {
            let w = kernel(x.row(i), x.row(j), sigma);
            if w > 0.0 {
                neighbors[i].push((j, w));
                neighbors[j].push((i, w));
            }
        }
    }
    SampleGraph::from_raw_edges(n, neighbors, GraphMethod::Complete, Some(sigma))
}

/// Node `i` keeps `i → j` when `e_ij ≥ μ_i + α·s_i`, where `μ_i`, `s_i`
/// are the mean and population std of `i`'s similarities to all other
/// nodes. Kept edges are symmetrized by union.
pub fn build_adaptive_threshold_graph(x: &Matrix, alpha: f64, sigma: f64) -> Result<SampleGraph, GraphError> {
    check_sigma(sigma)?;
    let n = x.rows();
    if n < 2 {
        return Err(GraphError::TooFewNodes { needed: 2, got: n });
    }
    let mut neighbors: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut sims = vec![0.0; n];
    for i in 0..n {
        for (j, s) in sims.iter_mut().enumerate() {
            *s = if j == i { 0.0 } else { kernel(x.row(i), x.row(j), sigma) };
        }
        let others = (n - 1) as f64;
        let mean = sims.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, s)| s).sum::<f64>() / others;
        let var = sims
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, s)| (s - mean) * (s - mean))
            .sum::<f64>()
            / others;
        let threshold = mean + alpha * var.sqrt();
        for (j, &w) in sims.iter().enumerate() {
            if j != i && w > 0.0 && w >= threshold {
                neighbors[i].push((j, w));
                neighbors[j].push((i, w));
            }
        }
    }
    SampleGraph::from_raw_edges(n, neighbors, GraphMethod::AdaptiveThreshold, Some(sigma))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> Matrix {
        Matrix::from_vec(points.len(), 1, points.to_vec())
    }

    fn edge_set(g: &SampleGraph) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..g.n_nodes() {
            for e in g.neighbors(i) {
                if i < e.neighbor {
                    out.push((i, e.neighbor));
                }
            }
        }
        out
    }

    #[test]
    fn similarity_examples() {
        assert_eq!(gaussian_similarity(&[1.0, 2.0], &[1.0, 2.0], 0.3).unwrap(), 1.0);
        let e = gaussian_similarity(&[0.0, 0.0], &[3.0, 4.0], 5.0).unwrap();
        assert!((e - 0.367_879_4).abs() < 1e-7);
        assert_eq!(e, (-1.0f64).exp());
        assert_eq!(
            gaussian_similarity(&[0.0], &[1.0], 0.0),
            Err(GraphError::NonPositiveSigma(0.0))
        );
        assert_eq!(gaussian_similarity(&[0.0], &[1.0, 2.0], 1.0), Err(GraphError::LengthMismatch(1, 2)));
    }

    #[test]
    fn bandwidth_examples() {
        // pairs of {0,1,2}: 1, 2, 1 → median 1
        assert_eq!(median_bandwidth(&line(&[0.0, 1.0, 2.0]), 100, 0).unwrap(), 1.0);
        assert_eq!(median_bandwidth(&line(&[0.0, 4.0]), 100, 0).unwrap(), 4.0);
        assert_eq!(median_bandwidth(&line(&[3.0, 3.0, 3.0]), 100, 0), Err(GraphError::DegenerateData));
        // Six zero distances and four of 2: median 0 → mean of positive distances.
        assert_eq!(median_bandwidth(&line(&[0.0, 0.0, 0.0, 0.0, 2.0]), 100, 0).unwrap(), 2.0);
        // Three zeros and three 2s: median is 1, no fallback.
        assert_eq!(median_bandwidth(&line(&[0.0, 0.0, 0.0, 2.0]), 100, 0).unwrap(), 1.0);
    }

    #[test]
    fn bandwidth_subsample_is_seeded() {
        let pts: Vec<f64> = (0..50).map(|i| (i * i % 23) as f64).collect();
        let a = median_bandwidth(&line(&pts), 10, 5).unwrap();
        assert_eq!(a, median_bandwidth(&line(&pts), 10, 5).unwrap());
        assert!(a > 0.0);
    }

    #[test]
    fn knn_small_line() {
        // 0→1, 1→0, 3→1: union {0–1, 1–2}
        let g = build_knn_graph(&line(&[0.0, 1.0, 3.0]), 1, 1.0).unwrap();
        assert_eq!(edge_set(&g), vec![(0, 1), (1, 2)]);
        for i in 0..3 {
            assert_eq!(g.raw_weight(i, i), Some(1.0));
        }
    }

    #[test]
    fn knn_tie_breaks_low_index() {
        // node 2 (at 5) is equidistant from 0 and 1 and picks 0.
        let g = build_knn_graph(&line(&[0.0, 0.0, 5.0]), 1, 1.0).unwrap();
        assert_eq!(edge_set(&g), vec![(0, 1), (0, 2)]);
        assert!(build_knn_graph(&line(&[0.0, 1.0]), 2, 1.0).is_err());
        assert!(build_knn_graph(&line(&[0.0, 1.0]), 0, 1.0).is_err());
    }

    #[test]
    fn complete_counts() {
        let g = build_complete_graph(&line(&[0.0, 1.0, 2.5]), 1.0).unwrap();
        assert_eq!(g.n_undirected_edges(), 3);
        assert_eq!(g.n_entries(), 9);
        let single = build_complete_graph(&line(&[4.0]), 1.0).unwrap();
        assert_eq!(single.n_entries(), 1);
        assert_eq!(single.neighbors(0)[0].norm_weight, 1.0);
    }

    #[test]
    fn adaptive_examples() {
        let g = build_adaptive_threshold_graph(&line(&[0.0, 0.1, 10.0]), 0.0, 1.0).unwrap();
        // node 0: e01 ≈ 0.9048 kept, e02 ≈ 4.5e-5 dropped; node 2's mean is
        // ≈ 4.7e-5 so it keeps 2→1 (e21 ≈ 5.0e-5) and that survives the union.
        let e01 = (-0.1f64).exp();
        let e02 = (-10.0f64).exp();
        let mu0 = (e01 + e02) / 2.0;
        assert!((e01 - 0.9048).abs() < 1e-4 && (mu0 - 0.4524).abs() < 1e-4 && e02 < mu0);
        assert_eq!(edge_set(&g), vec![(0, 1), (1, 2)]);
        assert!(g.raw_weight(0, 2).is_none());

        // Mutually equidistant: every edge survives at equality.
        let tri = Matrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let g = build_adaptive_threshold_graph(&tri, 1.0, 1.0).unwrap();
        assert_eq!(g.n_undirected_edges(), 3);

        let g = build_adaptive_threshold_graph(&line(&[0.0, 0.3, 1.0, 4.0]), 1e9, 1.0).unwrap();
        assert_eq!(g.n_undirected_edges(), 0);
        assert_eq!(g.n_entries(), 4);
    }
}
