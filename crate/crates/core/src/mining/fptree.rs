//! Arena-backed FP-tree and the FP-Growth recursion.

use std::cmp::Reverse;

/// Sentinel for the root's item and parent.
const ROOT: usize = usize::MAX;

#[derive(Debug)]
struct Node {
    item: u32,
    count: usize,
    parent: usize,
    children: Vec<(u32, usize)>,
}

/// One header-table row: an item, its total count in the tree, and every
/// node carrying it.
#[derive(Debug)]
struct HeaderEntry {
    item: u32,
    total: usize,
    nodes: Vec<usize>,
}

/// Items are inserted in a fixed global order: descending frequency,
/// ties by ascending item id. `header` is kept in that order.
#[derive(Debug)]
pub(crate) struct FpTree {
    nodes: Vec<Node>,
    header: Vec<HeaderEntry>,
}

impl FpTree {
    /// Builds a tree from weighted transactions, keeping only items whose
    /// weighted count reaches `min_count`.
    pub(crate) fn build(transactions: &[(Vec<u32>, usize)], min_count: usize) -> Self {
        let mut freq: Vec<(u32, usize)> = Vec::new();
        {
            let mut counts = std::collections::BTreeMap::new();
            for (items, count) in transactions {
                for &item in items {
                    *counts.entry(item).or_insert(0usize) += count;
                }
            }
            freq.extend(counts.into_iter().filter(|&(_, c)| c >= min_count));
        }
        freq.sort_by_key(|&(item, c)| (Reverse(c), item));

        let max_item = freq.iter().map(|&(i, _)| i as usize + 1).max().unwrap_or(0);
        let mut rank = vec![usize::MAX; max_item];
        for (r, &(item, _)) in freq.iter().enumerate() {
            rank[item as usize] = r;
        }
        let mut tree = FpTree {
            nodes: vec![Node {
                item: u32::MAX,
                count: 0,
                parent: ROOT,
                children: Vec::new(),
            }],
            header: freq
                .iter()
                .map(|&(item, total)| HeaderEntry {
                    item,
                    total,
                    nodes: Vec::new(),
                })
                .collect(),
        };

        let mut ordered: Vec<usize> = Vec::new();
        for (items, count) in transactions {
            ordered.clear();
            ordered.extend(
                items
                    .iter()
                    .filter_map(|&i| rank.get(i as usize).copied().filter(|&r| r != usize::MAX)),
            );
            ordered.sort_unstable();
            tree.insert(&ordered, *count);
        }
        tree
    }

    fn insert(&mut self, ranks: &[usize], count: usize) {
        let mut cur = 0;
        for &r in ranks {
            let item = self.header[r].item;
            let existing = self.nodes[cur].children.iter().find(|&&(i, _)| i == item).map(|&(_, idx)| idx);
            cur = match existing {
                Some(idx) => {
                    self.nodes[idx].count += count;
                    idx
                }
                None => {
                    let idx = self.nodes.len();
                    self.nodes.push(Node {
                        item,
                        count,
                        parent: cur,
                        children: Vec::new(),
                    });
                    self.nodes[cur].children.push((item, idx));
                    self.header[r].nodes.push(idx);
                    idx
                }
            };
        }
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.header.is_empty()
    }

    /// Prefix paths (root side first) of every node holding header row `r`.
    fn conditional_base(&self, r: usize) -> Vec<(Vec<u32>, usize)> {
        self.header[r]
            .nodes
            .iter()
            .filter_map(|&idx| {
                let mut path = Vec::new();
                let mut p = self.nodes[idx].parent;
                while p != 0 && p != ROOT {
                    path.push(self.nodes[p].item);
                    p = self.nodes[p].parent;
                }
                if path.is_empty() {
                    None
                } else {
                    path.reverse();
                    Some((path, self.nodes[idx].count))
                }
            })
            .collect()
    }

    #[cfg(test)]
    fn header_chain_sums(&self) -> Vec<(u32, usize, usize)> {
        self.header
            .iter()
            .map(|h| (h.item, h.total, h.nodes.iter().map(|&i| self.nodes[i].count).sum()))
            .collect()
    }
}

/// Emits `(itemset, count)` for every frequent itemset extending `prefix`.
/// Itemsets are unsorted; callers canonicalize.
pub(crate) fn mine(
    tree: &FpTree,
    prefix: &mut Vec<u32>,
    min_count: usize,
    max_len: Option<usize>,
    out: &mut Vec<(Vec<u32>, usize)>,
) {
    for r in (0..tree.header.len()).rev() {
        let entry = &tree.header[r];
        prefix.push(entry.item);
        out.push((prefix.clone(), entry.total));
        if max_len.is_none_or(|m| prefix.len() < m) {
            let base = tree.conditional_base(r);
            if !base.is_empty() {
                let sub = FpTree::build(&base, min_count);
                if !sub.is_empty() {
                    mine(&sub, prefix, min_count, max_len, out);
                }
            }
        }
        prefix.pop();
    }
}
