//! Level-wise Apriori with exhaustive counting. Exponential; used as an
//! independent check on FP-Growth for small vocabularies.

use std::collections::BTreeSet;

use super::{canonical_set, check_support, min_count, scope_transactions, MiningError, PatternSet, Scope};
use crate::discretize::TransactionDb;

pub const ORACLE_MAX_ITEMS: usize = 20;

fn is_subset(small: &[u32], sorted_big: &[u32]) -> bool {
    small.iter().all(|i| sorted_big.binary_search(i).is_ok())
}

pub fn apriori_oracle(db: &TransactionDb, scope: Scope, min_support: f64) -> Result<PatternSet, MiningError> {
    apriori_oracle_bounded(db, scope, min_support, None)
}

pub fn apriori_oracle_bounded(
    db: &TransactionDb,
    scope: Scope,
    min_support: f64,
    max_len: Option<usize>,
) -> Result<PatternSet, MiningError> {
    if db.n_items() > ORACLE_MAX_ITEMS {
        return Err(MiningError::OracleTooLarge {
            items: db.n_items(),
            limit: ORACLE_MAX_ITEMS,
        });
    }
    check_support(min_support)?;
    let tx = scope_transactions(db, scope)?;
    let threshold = min_count(min_support, tx.len());
    let count = |cand: &[u32]| tx.iter().filter(|t| is_subset(cand, t)).count();

    let mut found: Vec<(Vec<u32>, usize)> = Vec::new();
    let mut level: Vec<Vec<u32>> = (0..db.n_items() as u32)
        .map(|i| vec![i])
        .filter(|c| count(c) >= threshold)
        .collect();
    let mut size = 1;
    while !level.is_empty() && max_len.is_none_or(|m| size <= m) {
        for c in &level {
            found.push((c.clone(), count(c)));
        }
        let frequent: BTreeSet<Vec<u32>> = level.iter().cloned().collect();
        let mut next = BTreeSet::new();
        for (a_idx, a) in level.iter().enumerate() {
            for b in &level[a_idx + 1..] {
                if a[..size - 1] != b[..size - 1] {
                    continue;
                }
                let mut cand = a.clone();
                cand.push(b[size - 1]);
                cand.sort_unstable();
                let all_subsets_frequent = (0..cand.len()).all(|skip| {
                    let sub: Vec<u32> = cand
                        .iter()
                        .enumerate()
                        .filter(|&(k, _)| k != skip)
                        .map(|(_, &v)| v)
                        .collect();
                    frequent.contains(&sub)
                });
                if all_subsets_frequent && count(&cand) >= threshold {
                    next.insert(cand);
                }
            }
        }
        level = next.into_iter().collect();
        size += 1;
    }
    Ok(canonical_set(found, scope, tx.len(), min_support, threshold))
}
