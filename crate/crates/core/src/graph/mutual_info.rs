//! Sample-pair mutual-information graph.
//!
//! Each feature is quantile-binned, giving every sample a bin vector. Two
//! samples are compared by the normalized mutual information of their bin
//! vectors, treating the feature index as the draw: the joint histogram
//! counts, over features `f`, the pair `(b_i[f], b_j[f])`.

use super::{GraphError, GraphMethod, SampleGraph};
use crate::discretize::{assign_bin, fit_quantile_bins};
use crate::linalg::Matrix;

/// Per-sample bin vectors from per-feature quantile bins.
pub fn sample_bin_vectors(x: &Matrix, bins: usize) -> Result<Vec<Vec<u16>>, GraphError> {
    if bins < 2 {
        return Err(GraphError::InvalidBins(bins));
    }
    let model = fit_quantile_bins(x, bins).map_err(|_| GraphError::InvalidBins(bins))?;
    Ok((0..x.rows())
        .map(|r| {
            x.row(r)
                .iter()
                .enumerate()
                .map(|(f, &v)| assign_bin(v, f, &model) as u16)
                .collect()
        })
        .collect())
}

fn entropy(seq: &[u16], bins: usize) -> f64 {
    let mut counts = vec![0usize; bins];
    for &b in seq {
        counts[b as usize] += 1;
    }
    let n = seq.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// `MI(a, b) / min(H(a), H(b))`, clamped to `[0, 1]`. When either sequence
/// has zero entropy the result is 1 for identical sequences and 0 otherwise.
pub fn normalized_mutual_information(a: &[u16], b: &[u16], bins: usize) -> f64 {
    let ha = entropy(a, bins);
    let hb = entropy(b, bins);
    nmi_with_entropies(a, b, bins, ha, hb, &mut vec![0; bins * bins])
}

fn nmi_with_entropies(a: &[u16], b: &[u16], bins: usize, ha: f64, hb: f64, joint: &mut [usize]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let h_min = ha.min(hb);
    if h_min <= 0.0 {
        return if a == b { 1.0 } else { 0.0 };
    }
    joint.fill(0);
    let mut ma = vec![0usize; bins];
    let mut mb = vec![0usize; bins];
    for (&x, &y) in a.iter().zip(b) {
        joint[x as usize * bins + y as usize] += 1;
        ma[x as usize] += 1;
        mb[y as usize] += 1;
    }
    let n = a.len() as f64;
    let mut mi = 0.0;
    for x in 0..bins {
        for y in 0..bins {
            let c = joint[x * bins + y];
            if c == 0 {
                continue;
            }
            let pxy = c as f64 / n;
            mi += pxy * ((c as f64 * n) / (ma[x] as f64 * mb[y] as f64)).ln();
        }
    }
    (mi / h_min).clamp(0.0, 1.0)
}

/// Keeps each node's top-`k` NMI partners (ties to the lower index),
/// symmetrizes by union and drops zero-NMI edges.
pub fn build_mutual_information_graph(x: &Matrix, mi_bins: usize, k: usize) -> Result<SampleGraph, GraphError> {
    let n = x.rows();
    if k == 0 || k + 1 > n {
        return Err(GraphError::InvalidK { k, n });
    }
    if x.cols() < mi_bins {
        log::warn!(
            "mutual-information graph: {} features for {} bins; per-sample histograms will be sparse",
            x.cols(),
            mi_bins
        );
    }
    let codes = sample_bin_vectors(x, mi_bins)?;
    let entropies: Vec<f64> = codes.iter().map(|c| entropy(c, mi_bins)).collect();
    let mut joint = vec![0usize; mi_bins * mi_bins];
    let mut neighbors: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut scores: Vec<(f64, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        scores.clear();
        for j in (0..n).filter(|&j| j != i) {
            // Evaluate in (low, high) order so both directions agree bitwise.
            let (lo, hi) = if i < j { (i, j) } else { (j, i) };
            let s = nmi_with_entropies(&codes[lo], &codes[hi], mi_bins, entropies[lo], entropies[hi], &mut joint);
            scores.push((s, j));
        }
        let by_score_desc = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
        if k < scores.len() {
            scores.select_nth_unstable_by(k - 1, by_score_desc);
            scores.truncate(k);
        }
        for &(s, j) in scores.iter() {
            if s > 0.0 {
                neighbors[i].push((j, s));
                neighbors[j].push((i, s));
            }
        }
    }
    SampleGraph::from_raw_edges(n, neighbors, GraphMethod::MutualInformation, None)
}
