//! Tree-structured memo of family scores.
//!
//! Each child node owns a trie. Below its root, level `i` branches on the
//! `i`-th parent in ascending node order, so every `(child, parent set)`
//! reaches exactly one trie node whatever order the caller lists the parents
//! in. Trie nodes are allocated only along paths that have been looked up.
//!
//! A cache holds scores for one dataset and one score kind; mixing them is a
//! caller error.

use alloc::vec::Vec;

const NO_ROOT: u32 = u32::MAX;

#[derive(Clone, Debug, Default)]
struct TrieNode {
    /// `(parent, child node)` sorted by parent.
    branches: Vec<(u32, u32)>,
    value: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct ScoreCache {
    roots: Vec<u32>,
    nodes: Vec<TrieNode>,
    entries: usize,
    hits: u64,
    misses: u64,
    max_entries: Option<usize>,
}

impl ScoreCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Cache that empties itself whenever it would exceed `max_entries`.
    pub fn with_entry_limit(max_entries: usize) -> Self {
        Self { max_entries: Some(max_entries.max(1)), ..Self::default() }
    }

    /// `(hits, misses)`.
    pub fn stats(&self) -> (u64, u64) {
        (self.hits, self.misses)
    }

    /// Number of stored family scores.
    pub fn len(&self) -> usize {
        self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries == 0
    }

    /// Drops all entries; counters are kept.
    pub fn clear(&mut self) {
        self.roots.clear();
        self.nodes.clear();
        self.entries = 0;
    }

    /// Cached score of `(child, parents)`, or `compute()` stored on a miss.
    pub fn get_or_compute<F: FnOnce() -> f64>(&mut self, child: usize, parents: &[usize], compute: F) -> f64 {
        if parents.windows(2).all(|w| w[0] < w[1]) {
            self.get_or_compute_sorted(child, parents.iter().copied(), compute)
        } else {
            let mut sorted = parents.to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            self.get_or_compute_sorted(child, sorted.into_iter(), compute)
        }
    }

    /// Every stored `(child, ascending parents, score)`, ordered by child and
    /// then lexicographically by parents.
    pub fn entries(&self) -> Vec<(usize, Vec<usize>, f64)> {
        let mut out = Vec::with_capacity(self.entries);
        let mut path = Vec::new();
        for (child, &root) in self.roots.iter().enumerate() {
            if root != NO_ROOT {
                self.collect(child, root as usize, &mut path, &mut out);
            }
        }
        out
    }

    fn collect(&self, child: usize, at: usize, path: &mut Vec<usize>, out: &mut Vec<(usize, Vec<usize>, f64)>) {
        let node = &self.nodes[at];
        if let Some(v) = node.value {
            out.push((child, path.clone(), v));
        }
        for &(p, next) in &node.branches {
            path.push(p as usize);
            self.collect(child, next as usize, path, out);
            path.pop();
        }
    }

    /// Cached value without touching the counters.
    pub fn peek(&self, child: usize, parents: &[usize]) -> Option<f64> {
        let mut sorted = parents.to_vec();
        sorted.sort_unstable();
        let mut at = *self.roots.get(child)?;
        if at == NO_ROOT {
            return None;
        }
        for p in sorted {
            let node = &self.nodes[at as usize];
            let i = node.branches.binary_search_by_key(&(p as u32), |b| b.0).ok()?;
            at = node.branches[i].1;
        }
        self.nodes[at as usize].value
    }

    /// Like [`get_or_compute`](Self::get_or_compute) for parents already in
    /// ascending order.
    pub(crate) fn get_or_compute_sorted<I, F>(&mut self, child: usize, parents: I, compute: F) -> f64
    where
        I: Iterator<Item = usize>,
        F: FnOnce() -> f64,
    {
        let slot = self.walk(child, parents);
        if let Some(v) = self.nodes[slot].value {
            self.hits += 1;
            return v;
        }
        self.misses += 1;
        let v = compute();
        if self.max_entries.is_some_and(|cap| self.entries >= cap) {
            // Start over; the new value is returned but not stored.
            self.clear();
            return v;
        }
        self.nodes[slot].value = Some(v);
        self.entries += 1;
        v
    }

    fn walk<I: Iterator<Item = usize>>(&mut self, child: usize, parents: I) -> usize {
        if self.roots.len() <= child {
            self.roots.resize(child + 1, NO_ROOT);
        }
        if self.roots[child] == NO_ROOT {
            self.roots[child] = self.push_node();
        }
        let mut at = self.roots[child] as usize;
        for p in parents {
            let key = p as u32;
            at = match self.nodes[at].branches.binary_search_by_key(&key, |b| b.0) {
                Ok(i) => self.nodes[at].branches[i].1 as usize,
                Err(i) => {
                    let next = self.push_node();
                    self.nodes[at].branches.insert(i, (key, next));
                    next as usize
                }
            };
        }
        at
    }

    fn push_node(&mut self) -> u32 {
        self.nodes.push(TrieNode::default());
        (self.nodes.len() - 1) as u32
    }
}
