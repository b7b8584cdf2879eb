//! FP-Growth over dense item ids.

use std::collections::HashMap;

const ROOT: usize = 0;

struct TreeNode {
    item: u32,
    count: usize,
    parent: usize,
    children: Vec<(u32, usize)>,
}

/// A prefix tree of weighted transactions plus, per item, the nodes holding it.
struct FpTree {
    nodes: Vec<TreeNode>,
    /// Items in ascending support order (mining order), with their total support.
    header: Vec<(u32, usize)>,
    links: HashMap<u32, Vec<usize>>,
}

impl FpTree {
    fn build(weighted: &[(Vec<u32>, usize)], min_count: usize) -> FpTree {
        let mut support: HashMap<u32, usize> = HashMap::new();
        for (items, w) in weighted {
            for &i in items {
                *support.entry(i).or_default() += w;
            }
        }
        support.retain(|_, c| *c >= min_count);
        // Insertion order: descending support, ties by ascending id.
        let rank = |i: &u32| (std::cmp::Reverse(support[i]), *i);

        let mut tree = FpTree {
            nodes: vec![TreeNode { item: u32::MAX, count: 0, parent: ROOT, children: Vec::new() }],
            header: Vec::new(),
            links: HashMap::new(),
        };
        for (items, w) in weighted {
            let mut path: Vec<u32> = items.iter().copied().filter(|i| support.contains_key(i)).collect();
            path.sort_by_key(rank);
            path.dedup();
            tree.insert(&path, *w);
        }
        let mut header: Vec<(u32, usize)> = support.into_iter().collect();
        header.sort_by_key(|&(i, c)| (c, std::cmp::Reverse(i)));
        tree.header = header;
        tree
    }

    fn insert(&mut self, path: &[u32], weight: usize) {
        let mut at = ROOT;
        for &item in path {
            let existing = self.nodes[at].children.iter().find(|(i, _)| *i == item).map(|&(_, n)| n);
            let next = match existing {
                Some(n) => n,
                None => {
                    let n = self.nodes.len();
                    self.nodes.push(TreeNode { item, count: 0, parent: at, children: Vec::new() });
                    self.nodes[at].children.push((item, n));
                    self.links.entry(item).or_default().push(n);
                    n
                }
            };
            self.nodes[next].count += weight;
            at = next;
        }
    }

    /// Prefix paths ending just above each node holding `item`.
    fn conditional_base(&self, item: u32) -> Vec<(Vec<u32>, usize)> {
        self.links[&item]
            .iter()
            .filter_map(|&n| {
                let mut path = Vec::new();
                let mut at = self.nodes[n].parent;
                while at != ROOT {
                    path.push(self.nodes[at].item);
                    at = self.nodes[at].parent;
                }
                (!path.is_empty()).then(|| (path, self.nodes[n].count))
            })
            .collect()
    }
}

fn grow(tree: &FpTree, suffix: &mut Vec<u32>, min_count: usize, max_len: usize, out: &mut Vec<(Vec<u32>, usize)>) {
    for &(item, support) in &tree.header {
        suffix.push(item);
        let mut found = suffix.clone();
        found.sort_unstable();
        out.push((found, support));
        if suffix.len() < max_len {
            let base = tree.conditional_base(item);
            if !base.is_empty() {
                let sub = FpTree::build(&base, min_count);
                if !sub.header.is_empty() {
                    grow(&sub, suffix, min_count, max_len, out);
                }
            }
        }
        suffix.pop();
    }
}

/// Every itemset (sorted ids) contained in at least `min_count` transactions,
/// up to `max_len` items.
pub(crate) fn frequent_itemsets(transactions: &[Vec<u32>], min_count: usize, max_len: usize) -> Vec<(Vec<u32>, usize)> {
    let weighted: Vec<(Vec<u32>, usize)> = transactions.iter().map(|t| (t.clone(), 1)).collect();
    let tree = FpTree::build(&weighted, min_count.max(1));
    let mut out = Vec::new();
    if max_len > 0 {
        grow(&tree, &mut Vec::new(), min_count.max(1), max_len, &mut out);
    }
    out
}
