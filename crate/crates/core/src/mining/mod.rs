//! Frequent-itemset mining over a [`TransactionDb`] and the summary
//! metrics used to compare representations.
//!
//! Supports are counted within a scope: either the minority transactions
//! only or the whole database. Confidence is always measured against the
//! whole database as the class rule `pattern → minority`.

mod apriori;
mod fptree;
mod metrics;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discretize::TransactionDb;

pub use apriori::{apriori_oracle, apriori_oracle_bounded, ORACLE_MAX_ITEMS};
pub use metrics::{
    minority_coverage, mining_report, pattern_confidence, write_patterns_csv, MiningReport, ReportProvenance,
    VerticalIndex,
};

#[derive(Debug, Error, PartialEq)]
pub enum MiningError {
    #[error("no transactions in {0} scope")]
    EmptyScope(Scope),
    #[error("min_support must lie in (0, 1], got {0}")]
    InvalidSupport(f64),
    #[error("oracle limited to {limit} items, database has {items}")]
    OracleTooLarge { items: usize, limit: usize },
    #[error("pattern occurs in no transaction")]
    UndefinedConfidence,
    #[error("database has no minority transactions")]
    NoMinority,
    #[error("unknown scope `{0}`")]
    UnknownScope(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Minority,
    Full,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::Minority => "minority",
            Scope::Full => "full",
        })
    }
}

impl FromStr for Scope {
    type Err = MiningError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "minority" => Ok(Scope::Minority),
            "full" => Ok(Scope::Full),
            other => Err(MiningError::UnknownScope(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pattern {
    pub items: Vec<u32>,
    pub support_count: usize,
    pub support: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternSet {
    pub patterns: Vec<Pattern>,
    pub scope: Scope,
    pub scope_size: usize,
    pub min_support: f64,
    pub min_count: usize,
}

impl PatternSet {
    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// `(items, support_count)` pairs, in canonical order.
    pub fn counts(&self) -> Vec<(Vec<u32>, usize)> {
        self.patterns.iter().map(|p| (p.items.clone(), p.support_count)).collect()
    }

    /// Drops every pattern that has a mined proper superset. By downward
    /// closure it is enough to look one item up.
    pub fn maximal_only(mut self) -> Self {
        use std::collections::HashSet;
        let mut dominated: HashSet<Vec<u32>> = HashSet::new();
        for p in self.patterns.iter().filter(|p| p.items.len() > 1) {
            for skip in 0..p.items.len() {
                let mut sub = p.items.clone();
                sub.remove(skip);
                dominated.insert(sub);
            }
        }
        self.patterns.retain(|p| !dominated.contains(&p.items));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiningParams {
    pub scope: Scope,
    pub min_support: f64,
    /// Longest itemset to report; `None` mines without a bound.
    pub max_len: Option<usize>,
    pub maximal_only: bool,
}

impl Default for MiningParams {
    fn default() -> Self {
        Self {
            scope: Scope::Minority,
            min_support: 0.05,
            max_len: Some(3),
            maximal_only: false,
        }
    }
}

/// `⌈min_support · scope_size⌉`, at least 1. The product is nudged down by
/// 1e-9 so values like `0.1 · 60` are not pushed past an integer by
/// rounding.
pub fn min_count(min_support: f64, scope_size: usize) -> usize {
    ((min_support * scope_size as f64 - 1e-9).ceil() as usize).max(1)
}

pub(crate) fn scope_transactions(db: &TransactionDb, scope: Scope) -> Result<Vec<&Vec<u32>>, MiningError> {
    let tx: Vec<&Vec<u32>> = db
        .transactions()
        .iter()
        .zip(db.labels())
        .filter(|&(_, &l)| scope == Scope::Full || l == 1)
        .map(|(t, _)| t)
        .collect();
    if tx.is_empty() {
        return Err(MiningError::EmptyScope(scope));
    }
    Ok(tx)
}

fn check_support(min_support: f64) -> Result<(), MiningError> {
    if min_support > 0.0 && min_support <= 1.0 {
        Ok(())
    } else {
        Err(MiningError::InvalidSupport(min_support))
    }
}

/// Sorts by size, then lexicographically, and attaches relative supports.
pub(crate) fn canonical_set(
    mut found: Vec<(Vec<u32>, usize)>,
    scope: Scope,
    scope_size: usize,
    min_support: f64,
    min_count: usize,
) -> PatternSet {
    for (items, _) in found.iter_mut() {
        items.sort_unstable();
    }
    found.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
    let patterns = found
        .into_iter()
        .map(|(items, support_count)| Pattern {
            items,
            support_count,
            support: support_count as f64 / scope_size as f64,
        })
        .collect();
    PatternSet {
        patterns,
        scope,
        scope_size,
        min_support,
        min_count,
    }
}

/// Every itemset whose scope support reaches `min_support`.
pub fn fp_growth(db: &TransactionDb, scope: Scope, min_support: f64) -> Result<PatternSet, MiningError> {
    mine_patterns(
        db,
        &MiningParams {
            scope,
            min_support,
            max_len: None,
            maximal_only: false,
        },
    )
}

/// FP-Growth honouring `max_len` and the maximal-only filter.
pub fn mine_patterns(db: &TransactionDb, params: &MiningParams) -> Result<PatternSet, MiningError> {
    check_support(params.min_support)?;
    let tx = scope_transactions(db, params.scope)?;
    let scope_size = tx.len();
    let min_count = min_count(params.min_support, scope_size);
    let weighted: Vec<(Vec<u32>, usize)> = tx.into_iter().map(|t| (t.clone(), 1)).collect();
    let mut found = Vec::new();
    if params.max_len != Some(0) {
        let tree = fptree::FpTree::build(&weighted, min_count);
        fptree::mine(&tree, &mut Vec::new(), min_count, params.max_len, &mut found);
    }
    let set = canonical_set(found, params.scope, scope_size, params.min_support, min_count);
    Ok(if params.maximal_only { set.maximal_only() } else { set })
}
