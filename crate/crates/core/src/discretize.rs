//! Per-dimension quantile binning and the itemized transaction database.
//!
//! Item ids are `dim * bins_per_dim + bin`. Cut points sit at the
//! `q / B` quantiles (linear interpolation between order statistics, the
//! inclusive convention), duplicates collapsed. A value equal to a cut point
//! falls in the lower bin.

use std::fmt::Write as _;
use std::io::Write;

use thiserror::Error;

use crate::linalg::Matrix;

#[derive(Debug, Error, PartialEq)]
pub enum DiscretizeError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("bins per dimension must be at least 1")]
    InvalidBins,
    #[error("empty matrix")]
    Empty,
}

/// Inclusive-convention quantile of already sorted values:
/// `h = (n - 1) p + 1`, `v[⌊h⌋] + (h - ⌊h⌋)(v[⌊h⌋ + 1] - v[⌊h⌋])` (1-based).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of empty slice");
    let h = (n - 1) as f64 * p + 1.0;
    let lo = h.floor();
    let idx = lo as usize;
    let frac = h - lo;
    if idx >= n {
        return sorted[n - 1];
    }
    let base = sorted[idx - 1];
    if frac == 0.0 {
        base
    } else {
        base + frac * (sorted[idx] - base)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinningModel {
    bins_per_dim: usize,
    boundaries: Vec<Vec<f64>>,
    constant_dims: Vec<bool>,
}

impl BinningModel {
    pub fn n_dims(&self) -> usize {
        self.boundaries.len()
    }

    pub fn bins_per_dim(&self) -> usize {
        self.bins_per_dim
    }

    pub fn boundaries(&self, dim: usize) -> &[f64] {
        &self.boundaries[dim]
    }

    pub fn is_constant(&self, dim: usize) -> bool {
        self.constant_dims[dim]
    }

    pub fn n_items(&self) -> usize {
        self.n_dims() * self.bins_per_dim
    }
}

pub fn fit_quantile_bins(matrix: &Matrix, bins: usize) -> Result<BinningModel, DiscretizeError> {
    if bins == 0 {
        return Err(DiscretizeError::InvalidBins);
    }
    if matrix.rows() == 0 {
        return Err(DiscretizeError::Empty);
    }
    let mut boundaries = Vec::with_capacity(matrix.cols());
    let mut constant_dims = Vec::with_capacity(matrix.cols());
    for c in 0..matrix.cols() {
        let mut col = matrix.column(c);
        col.sort_by(f64::total_cmp);
        let constant = col[0] == col[col.len() - 1];
        let mut cuts: Vec<f64> = Vec::with_capacity(bins.saturating_sub(1));
        if !constant {
            for q in 1..bins {
                let cut = quantile_sorted(&col, q as f64 / bins as f64);
                if cuts.last().is_none_or(|&last| cut > last) {
                    cuts.push(cut);
                }
            }
        }
        boundaries.push(cuts);
        constant_dims.push(constant);
    }
    Ok(BinningModel {
        bins_per_dim: bins,
        boundaries,
        constant_dims,
    })
}

/// Number of cut points strictly below `value`.
pub fn assign_bin(value: f64, dim: usize, model: &BinningModel) -> usize {
    model.boundaries[dim].partition_point(|&cut| cut < value)
}

/// Mapping between item ids and `(dimension, bin)` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vocabulary {
    pub n_dims: usize,
    pub bins_per_dim: usize,
}

impl Vocabulary {
    pub fn item_id(&self, dim: usize, bin: usize) -> u32 {
        debug_assert!(dim < self.n_dims && bin < self.bins_per_dim);
        (dim * self.bins_per_dim + bin) as u32
    }

    pub fn decode(&self, item: u32) -> (usize, usize) {
        let item = item as usize;
        (item / self.bins_per_dim, item % self.bins_per_dim)
    }

    pub fn n_items(&self) -> usize {
        self.n_dims * self.bins_per_dim
    }

    pub fn token(&self, item: u32) -> String {
        let (dim, bin) = self.decode(item);
        format!("{dim}:{bin}")
    }
}

/// Transactions with side-band class labels. Databases built by
/// [`to_transactions`] carry a [`Vocabulary`]; hand-built ones from
/// [`TransactionDb::from_itemsets`] may hold arbitrary item sets.
#[derive(Debug, Clone, PartialEq)]
pub struct TransactionDb {
    transactions: Vec<Vec<u32>>,
    labels: Vec<u8>,
    n_items: usize,
    vocabulary: Option<Vocabulary>,
}

impl TransactionDb {
    /// Items are sorted and deduplicated. Panics if an item id is
    /// `>= n_items` or the label count differs from the transaction count.
    pub fn from_itemsets(transactions: Vec<Vec<u32>>, labels: Vec<u8>, n_items: usize) -> Self {
        assert_eq!(transactions.len(), labels.len(), "one label per transaction");
        let transactions = transactions
            .into_iter()
            .map(|mut t| {
                t.sort_unstable();
                t.dedup();
                assert!(t.iter().all(|&i| (i as usize) < n_items), "item id out of range");
                t
            })
            .collect();
        Self {
            transactions,
            labels,
            n_items,
            vocabulary: None,
        }
    }

    pub fn transactions(&self) -> &[Vec<u32>] {
        &self.transactions
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn vocabulary(&self) -> Option<Vocabulary> {
        self.vocabulary
    }

    pub fn n_minority(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn item_token(&self, item: u32) -> String {
        match self.vocabulary {
            Some(v) => v.token(item),
            None => item.to_string(),
        }
    }

    /// One line per transaction: space-separated item ids, then `#label`.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut line = String::new();
        for (t, &label) in self.transactions.iter().zip(&self.labels) {
            line.clear();
            for item in t {
                write!(line, "{item} ").expect("write to string");
            }
            writeln!(line, "#{label}").expect("write to string");
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }
}

pub fn to_transactions(
    matrix: &Matrix,
    labels: &[u8],
    model: &BinningModel,
) -> Result<TransactionDb, DiscretizeError> {
    if matrix.cols() != model.n_dims() {
        return Err(DiscretizeError::DimensionMismatch {
            expected: model.n_dims(),
            got: matrix.cols(),
        });
    }
    if labels.len() != matrix.rows() {
        return Err(DiscretizeError::DimensionMismatch {
            expected: matrix.rows(),
            got: labels.len(),
        });
    }
    let vocabulary = Vocabulary {
        n_dims: model.n_dims(),
        bins_per_dim: model.bins_per_dim,
    };
    // Ids increase with dim, so each transaction comes out sorted.
    let transactions = (0..matrix.rows())
        .map(|r| {
            matrix
                .row(r)
                .iter()
                .enumerate()
                .map(|(dim, &v)| vocabulary.item_id(dim, assign_bin(v, dim, model)))
                .collect()
        })
        .collect();
    Ok(TransactionDb {
        transactions,
        labels: labels.to_vec(),
        n_items: vocabulary.n_items(),
        vocabulary: Some(vocabulary),
    })
}

/// Fit bins on `matrix` and encode it in one step.
pub fn discretize(matrix: &Matrix, labels: &[u8], bins: usize) -> Result<TransactionDb, DiscretizeError> {
    let model = fit_quantile_bins(matrix, bins)?;
    to_transactions(matrix, labels, &model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn col(values: &[f64]) -> Matrix {
        Matrix::from_vec(values.len(), 1, values.to_vec())
    }

    #[test]
    fn median_cut() {
        let m = fit_quantile_bins(&col(&[1.0, 2.0, 3.0, 4.0]), 2).unwrap();
        assert_eq!(m.boundaries(0), &[2.5]);
        assert_eq!(assign_bin(2.5, 0, &m), 0);
        assert_eq!(assign_bin(3.0, 0, &m), 1);
    }

    #[test]
    fn constant_dim() {
        let m = fit_quantile_bins(&col(&[5.0, 5.0, 5.0]), 4).unwrap();
        assert!(m.is_constant(0));
        assert!(m.boundaries(0).is_empty());
        for v in [-1e9, 5.0, 1e9] {
            assert_eq!(assign_bin(v, 0, &m), 0);
        }
    }

    #[test]
    fn skewed_cuts_collapse() {
        // sorted {0,0,0,10}: p=0.5 → h=2.5 → 0.
        let m = fit_quantile_bins(&col(&[0.0, 10.0, 0.0, 0.0]), 2).unwrap();
        assert_eq!(m.boundaries(0), &[0.0]);
        let bins: Vec<usize> = [0.0, 0.0, 0.0, 10.0].iter().map(|&v| assign_bin(v, 0, &m)).collect();
        assert_eq!(bins, vec![0, 0, 0, 1]);

        // B=4: quantiles 0, 0, 2.5 → duplicate 0 collapses.
        let m = fit_quantile_bins(&col(&[0.0, 0.0, 0.0, 10.0]), 4).unwrap();
        assert_eq!(m.boundaries(0), &[0.0, 2.5]);
        assert!(!m.is_constant(0));
    }

    #[test]
    fn item_id_scheme() {
        let matrix = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let m = fit_quantile_bins(&matrix, 2).unwrap();
        let db = to_transactions(&matrix, &[1, 0], &m).unwrap();
        assert_eq!(db.transactions()[0], vec![0, 3]);
        assert_eq!(db.transactions()[1], vec![1, 2]);
        assert_eq!(db.labels(), &[1, 0]);
        assert_eq!(db.vocabulary().unwrap().decode(3), (1, 1));
        let mut buf = Vec::new();
        db.write_to(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0 3 #1\n1 2 #0\n");
    }

    #[test]
    fn identical_rows_identical_items() {
        let matrix = Matrix::from_rows(&[vec![0.3, -1.0, 2.0], vec![0.3, -1.0, 2.0], vec![1.0, 5.0, 0.0]]);
        let db = discretize(&matrix, &[0, 1, 0], 3).unwrap();
        assert_eq!(db.len(), 3);
        assert!(db.transactions().iter().all(|t| t.len() == 3));
        assert_eq!(db.transactions()[0], db.transactions()[1]);
    }

    #[test]
    fn dimension_mismatch() {
        let m = fit_quantile_bins(&Matrix::zeros(3, 2), 2).unwrap();
        assert_eq!(
            to_transactions(&Matrix::zeros(3, 3), &[0, 0, 1], &m),
            Err(DiscretizeError::DimensionMismatch { expected: 2, got: 3 })
        );
    }

    #[test]
    fn quartiles_balance_distinct_values() {
        let values: Vec<f64> = (0..40).map(|i| ((i * 17) % 40) as f64 * 0.37 - 3.0).collect();
        let m = fit_quantile_bins(&col(&values), 4).unwrap();
        let mut counts = [0usize; 4];
        for &v in &values {
            counts[assign_bin(v, 0, &m)] += 1;
        }
        assert_eq!(counts, [10, 10, 10, 10]);
    }

    proptest! {
        #[test]
        fn assign_bin_monotone(
            values in prop::collection::vec(-100.0f64..100.0, 1..60),
            bins in 1usize..8,
            a in -150.0f64..150.0,
            b in -150.0f64..150.0,
        ) {
            let m = fit_quantile_bins(&col(&values), bins).unwrap();
            let cuts = m.boundaries(0);
            prop_assert!(cuts.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(cuts.len() < bins.max(1));
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(assign_bin(lo, 0, &m) <= assign_bin(hi, 0, &m));
        }

        #[test]
        fn balanced_when_distinct(k in 1usize..10, bins in 1usize..6, shift in -5.0f64..5.0) {
            let n = k * bins;
            let values: Vec<f64> = (0..n).map(|i| shift + (i as f64) * 0.5).collect();
            let m = fit_quantile_bins(&col(&values), bins).unwrap();
            let mut counts = vec![0usize; bins];
            for &v in &values {
                counts[assign_bin(v, 0, &m)] += 1;
            }
            prop_assert!(counts.iter().all(|&c| c == k), "{:?}", counts);
        }

        #[test]
        fn vocabulary_round_trip(n_dims in 1usize..50, bins in 1usize..10) {
            let v = Vocabulary { n_dims, bins_per_dim: bins };
            for id in 0..v.n_items() as u32 {
                let (d, b) = v.decode(id);
                prop_assert_eq!(v.item_id(d, b), id);
            }
        }
    }
}
