use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{MiningError, PatternSet};
use crate::baselines::Variant;
use crate::data::format_f64;
use crate::discretize::TransactionDb;
use crate::graph::GraphMethod;

/// Per-item transaction bitsets for fast containment counting.
#[derive(Debug, Clone)]
pub struct VerticalIndex {
    n_transactions: usize,
    items: Vec<Vec<u64>>,
    minority: Vec<u64>,
}

impl VerticalIndex {
    pub fn new(db: &TransactionDb) -> Self {
        let words = db.len().div_ceil(64);
        let mut items = vec![vec![0u64; words]; db.n_items()];
        let mut minority = vec![0u64; words];
        for (t, (tx, &label)) in db.transactions().iter().zip(db.labels()).enumerate() {
            let (w, bit) = (t / 64, 1u64 << (t % 64));
            for &i in tx {
                items[i as usize][w] |= bit;
            }
            if label == 1 {
                minority[w] |= bit;
            }
        }
        Self {
            n_transactions: db.len(),
            items,
            minority,
        }
    }

    /// Bitset of transactions containing every item of `pattern`.
    pub fn occurrences(&self, pattern: &[u32]) -> Vec<u64> {
        let words = self.minority.len();
        let mut acc = vec![u64::MAX; words];
        let tail = self.n_transactions % 64;
        if tail != 0 {
            acc[words - 1] = (1u64 << tail) - 1;
        }
        for &i in pattern {
            match self.items.get(i as usize) {
                Some(bits) => acc.iter_mut().zip(bits).for_each(|(a, b)| *a &= b),
                None => acc.fill(0),
            }
        }
        acc
    }

    /// `(all occurrences, minority occurrences)`.
    pub fn counts(&self, pattern: &[u32]) -> (usize, usize) {
        let occ = self.occurrences(pattern);
        let all = occ.iter().map(|w| w.count_ones() as usize).sum();
        let min = occ
            .iter()
            .zip(&self.minority)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum();
        (all, min)
    }

    pub fn n_minority(&self) -> usize {
        self.minority.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Fraction of minority transactions containing at least one pattern.
    pub fn coverage<'a>(&self, patterns: impl IntoIterator<Item = &'a [u32]>) -> Result<f64, MiningError> {
        let n_min = self.n_minority();
        if n_min == 0 {
            return Err(MiningError::NoMinority);
        }
        let mut covered = vec![0u64; self.minority.len()];
        for p in patterns {
            for (c, o) in covered.iter_mut().zip(self.occurrences(p)) {
                *c |= o;
            }
        }
        let hit: usize = covered
            .iter()
            .zip(&self.minority)
            .map(|(c, m)| (c & m).count_ones() as usize)
            .sum();
        Ok(hit as f64 / n_min as f64)
    }
}

fn contains(tx: &[u32], pattern: &[u32]) -> bool {
    pattern.iter().all(|i| tx.binary_search(i).is_ok())
}

/// Confidence of the class rule `pattern → minority` over the whole
/// database.
pub fn pattern_confidence(pattern: &[u32], db: &TransactionDb) -> Result<f64, MiningError> {
    let mut all = 0usize;
    let mut minority = 0usize;
    for (tx, &label) in db.transactions().iter().zip(db.labels()) {
        if contains(tx, pattern) {
            all += 1;
            minority += usize::from(label == 1);
        }
    }
    if all == 0 {
        return Err(MiningError::UndefinedConfidence);
    }
    Ok(minority as f64 / all as f64)
}

/// Fraction of minority transactions that contain at least one pattern.
pub fn minority_coverage(patterns: &PatternSet, db: &TransactionDb) -> Result<f64, MiningError> {
    let minority: Vec<&Vec<u32>> = db
        .transactions()
        .iter()
        .zip(db.labels())
        .filter(|&(_, &l)| l == 1)
        .map(|(t, _)| t)
        .collect();
    if minority.is_empty() {
        return Err(MiningError::NoMinority);
    }
    let covered = minority
        .iter()
        .filter(|t| patterns.patterns.iter().any(|p| contains(t, &p.items)))
        .count();
    Ok(covered as f64 / minority.len() as f64)
}

/// Run metadata copied into a report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportProvenance {
    pub variant: Variant,
    pub graph_method: Option<GraphMethod>,
    pub embedding_dim: usize,
    pub seed: u64,
    pub config_digest: String,
    pub runtime_ms: Option<u64>,
}

/// The four comparison metrics plus provenance. `embedding_dim` is the
/// dimensionality of the representation that was binned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningReport {
    pub variant: Variant,
    pub graph_method: Option<GraphMethod>,
    pub embedding_dim: usize,
    pub num_patterns: usize,
    pub avg_support: f64,
    pub avg_confidence: f64,
    pub minority_coverage: f64,
    pub seed: u64,
    pub config_digest: String,
    /// Wall-clock time; absent unless timing was requested.
    pub runtime_ms: Option<u64>,
}

impl MiningReport {
    pub fn is_empty(&self) -> bool {
        self.num_patterns == 0
    }
}

pub fn mining_report(patterns: &PatternSet, db: &TransactionDb, provenance: ReportProvenance) -> MiningReport {
    let mut report = MiningReport {
        variant: provenance.variant,
        graph_method: provenance.graph_method,
        embedding_dim: provenance.embedding_dim,
        num_patterns: patterns.len(),
        avg_support: 0.0,
        avg_confidence: 0.0,
        minority_coverage: 0.0,
        seed: provenance.seed,
        config_digest: provenance.config_digest,
        runtime_ms: provenance.runtime_ms,
    };
    if patterns.is_empty() {
        return report;
    }
    let index = VerticalIndex::new(db);
    report.avg_support = patterns.patterns.iter().map(|p| p.support).sum::<f64>() / patterns.len() as f64;
    let mut conf_sum = 0.0;
    let mut conf_n = 0usize;
    for p in &patterns.patterns {
        let (all, min) = index.counts(&p.items);
        if all > 0 {
            conf_sum += min as f64 / all as f64;
            conf_n += 1;
        }
    }
    if conf_n > 0 {
        report.avg_confidence = conf_sum / conf_n as f64;
    }
    report.minority_coverage = index
        .coverage(patterns.patterns.iter().map(|p| p.items.as_slice()))
        .unwrap_or(0.0);
    report
}

/// `items;support;confidence`, items as `dim:bin` tokens joined by `|`.
pub fn write_patterns_csv<W: Write>(patterns: &PatternSet, db: &TransactionDb, mut out: W) -> std::io::Result<()> {
    let index = VerticalIndex::new(db);
    writeln!(out, "items;support;confidence")?;
    for p in &patterns.patterns {
        let tokens: Vec<String> = p.items.iter().map(|&i| db.item_token(i)).collect();
        let (all, min) = index.counts(&p.items);
        let conf = if all == 0 { String::new() } else { format_f64(min as f64 / all as f64) };
        writeln!(out, "{};{};{}", tokens.join("|"), format_f64(p.support), conf)?;
    }
    Ok(())
}
