//! DAG representation and purely structural operations.
//!
//! A [`Dag`] keeps three dense bit matrices: children (row `x` holds the heads
//! of arcs leaving `x`), parents (its transpose) and descendants (the strict
//! transitive closure of children). The descendant matrix makes the
//! acyclicity test for an arc addition a single bit lookup.
//!
//! Nodes are dense indices `0..n`. Names live in the data layer.

use alloc::collections::BinaryHeap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;
use core::fmt::Write;

use rand::Rng;

use crate::bits::{iter_ones, BitMatrix};
use crate::error::{Error, Result};
use crate::rng::uniform_index;

/// A directed arc `tail -> head`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Arc {
    pub tail: usize,
    pub head: usize,
}

impl Arc {
    pub const fn new(tail: usize, head: usize) -> Self {
        Self { tail, head }
    }

    pub const fn reversed(self) -> Self {
        Self { tail: self.head, head: self.tail }
    }
}

impl From<(usize, usize)> for Arc {
    fn from((tail, head): (usize, usize)) -> Self {
        Self { tail, head }
    }
}

/// Canonical label of a Markov equivalence class: skeleton plus v-structures.
///
/// Two DAGs share a fingerprint exactly when they are Markov equivalent. The
/// derived ordering (skeleton first, then v-structures, both lexicographic)
/// is the tie-breaking order used by the search.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fingerprint {
    /// Unordered adjacent pairs `(a, b)` with `a < b`, sorted.
    pub skeleton: Vec<(usize, usize)>,
    /// Triples `(a, c, b)` with `a < b` meaning `a -> c <- b`, `a`, `b` non-adjacent. Sorted.
    pub vstructures: Vec<(usize, usize, usize)>,
}

impl Fingerprint {
    /// Checks the structural invariants: sorted, every v-structure edge in the
    /// skeleton and every v-structure's endpoints non-adjacent.
    pub fn is_consistent(&self) -> bool {
        let sorted = self.skeleton.windows(2).all(|w| w[0] < w[1]) && self.vstructures.windows(2).all(|w| w[0] < w[1]);
        let has = |a: usize, b: usize| {
            let key = if a < b { (a, b) } else { (b, a) };
            self.skeleton.binary_search(&key).is_ok()
        };
        sorted
            && self.skeleton.iter().all(|&(a, b)| a < b)
            && self.vstructures.iter().all(|&(a, c, b)| a < b && has(a, c) && has(b, c) && !has(a, b))
    }

    pub fn edge_count(&self) -> usize {
        self.skeleton.len()
    }
}

/// Directed acyclic graph over nodes `0..n`.
///
/// Values are immutable from the outside: every edit returns a new graph.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Dag {
    n: usize,
    children: BitMatrix,
    parents: BitMatrix,
    descendants: BitMatrix,
}

impl Dag {
    /// Graph with `n` nodes and no arcs.
    pub fn empty(n: usize) -> Self {
        Self { n, children: BitMatrix::new(n), parents: BitMatrix::new(n), descendants: BitMatrix::new(n) }
    }

    /// Builds a graph from an arc list, rejecting cycles, duplicates and
    /// two-way pairs.
    pub fn from_arcs<I, A>(n: usize, arcs: I) -> Result<Self>
    where
        I: IntoIterator<Item = A>,
        A: Into<Arc>,
    {
        let mut g = Self::empty(n);
        for a in arcs {
            g.insert_arc(a.into())?;
        }
        Ok(g)
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn has_arc(&self, tail: usize, head: usize) -> bool {
        self.children.get(tail, head)
    }

    #[inline]
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.children.get(a, b) || self.children.get(b, a)
    }

    /// True iff `y` is reachable from `x` by a directed path of length >= 1.
    #[inline]
    pub fn is_descendant(&self, x: usize, y: usize) -> bool {
        self.descendants.get(x, y)
    }

    /// Parents of `y` in ascending order.
    pub fn parents(&self, y: usize) -> impl Iterator<Item = usize> + '_ {
        iter_ones(self.parents.row(y))
    }

    /// Children of `x` in ascending order.
    pub fn children(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        iter_ones(self.children.row(x))
    }

    /// Descendants of `x` in ascending order.
    pub fn descendants(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        iter_ones(self.descendants.row(x))
    }

    pub fn parent_count(&self, y: usize) -> usize {
        self.parents.row_count(y)
    }

    /// All arcs ordered by `(tail, head)`.
    pub fn arcs(&self) -> Vec<Arc> {
        (0..self.n).flat_map(|t| self.children(t).map(move |h| Arc::new(t, h))).collect()
    }

    pub fn arc_count(&self) -> usize {
        (0..self.n).map(|x| self.children.row_count(x)).sum()
    }

    fn check_arc(&self, a: Arc) -> Result<()> {
        if a.tail == a.head || a.tail >= self.n || a.head >= self.n {
            return Err(Error::InvalidArc { tail: a.tail, head: a.head, n: self.n });
        }
        Ok(())
    }

    /// Returns a copy with `a` added.
    pub fn add_arc(&self, a: Arc) -> Result<Self> {
        let mut g = self.clone();
        g.insert_arc(a)?;
        Ok(g)
    }

    /// Returns a copy with `a` removed.
    pub fn remove_arc(&self, a: Arc) -> Result<Self> {
        let mut g = self.clone();
        g.delete_arc(a)?;
        Ok(g)
    }

    /// An arc `x -> y` is covered when `Pa(y) = Pa(x) ∪ {x}`.
    pub fn is_covered(&self, a: Arc) -> Result<bool> {
        self.check_arc(a)?;
        if !self.has_arc(a.tail, a.head) {
            return Err(Error::MissingArc { tail: a.tail, head: a.head });
        }
        Ok(self.covered_unchecked(a))
    }

    fn covered_unchecked(&self, a: Arc) -> bool {
        let ph = self.parents.row(a.head);
        let pt = self.parents.row(a.tail);
        let (tw, tb) = (a.tail / 64, 1u64 << (a.tail % 64));
        ph.iter().zip(pt).enumerate().all(|(i, (&h, &t))| h == if i == tw { t | tb } else { t })
    }

    /// Covered arcs ordered by `(tail, head)`.
    pub fn covered_arcs(&self) -> Vec<Arc> {
        let mut out = Vec::new();
        for h in 0..self.n {
            for t in self.parents(h) {
                let a = Arc::new(t, h);
                if self.covered_unchecked(a) {
                    out.push(a);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Reverses a covered arc. The result is acyclic and Markov equivalent.
    pub fn reverse_covered_arc(&self, a: Arc) -> Result<Self> {
        let mut g = self.clone();
        g.flip_covered(a)?;
        Ok(g)
    }

    /// Reverses one covered arc chosen uniformly; unchanged if none exists.
    pub fn random_car<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        let mut g = self.clone();
        g.apply_random_car(rng);
        g
    }

    /// Topological order; among ready nodes the smallest index goes first.
    pub fn causal_order(&self) -> Vec<usize> {
        let mut indegree: Vec<usize> = (0..self.n).map(|y| self.parent_count(y)).collect();
        let mut ready: BinaryHeap<Reverse<usize>> = (0..self.n).filter(|&y| indegree[y] == 0).map(Reverse).collect();
        let mut order = Vec::with_capacity(self.n);
        while let Some(Reverse(v)) = ready.pop() {
            order.push(v);
            for c in self.children(v) {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.push(Reverse(c));
                }
            }
        }
        debug_assert_eq!(order.len(), self.n);
        order
    }

    /// Whether `xs` and `ys` are d-separated given `zs`.
    ///
    /// Reachability over (node, direction) states: a trail may pass a
    /// non-collider outside `zs`, and a collider only if it is in `zs` or
    /// has a descendant there.
    pub fn d_separated(&self, xs: &[usize], ys: &[usize], zs: &[usize]) -> Result<bool> {
        if xs.is_empty() || ys.is_empty() {
            return Err(Error::EmptySet);
        }
        let n = self.n;
        let mut tag = vec![0u8; n];
        for (set, bit) in [(xs, 1u8), (ys, 2), (zs, 4)] {
            for &v in set {
                if v >= n {
                    return Err(Error::Index { index: v, limit: n });
                }
                if tag[v] & !bit != 0 {
                    return Err(Error::Overlap);
                }
                tag[v] |= bit;
            }
        }
        let in_z = |v: usize| tag[v] & 4 != 0;

        // Z and its ancestors.
        let mut opens_collider = vec![false; n];
        let mut stack: Vec<usize> = zs.to_vec();
        for &z in zs {
            opens_collider[z] = true;
        }
        while let Some(v) = stack.pop() {
            for p in self.parents(v) {
                if !opens_collider[p] {
                    opens_collider[p] = true;
                    stack.push(p);
                }
            }
        }

        // `up` means the trail arrived from a child.
        let mut seen_up = vec![false; n];
        let mut seen_down = vec![false; n];
        let mut frontier: Vec<(usize, bool)> = xs.iter().map(|&x| (x, true)).collect();
        while let Some((v, up)) = frontier.pop() {
            let seen = if up { &mut seen_up[v] } else { &mut seen_down[v] };
            if *seen {
                continue;
            }
            *seen = true;
            if !in_z(v) && tag[v] & 2 != 0 {
                return Ok(false);
            }
            if up {
                if !in_z(v) {
                    frontier.extend(self.parents(v).map(|p| (p, true)));
                    frontier.extend(self.children(v).map(|c| (c, false)));
                }
            } else {
                if !in_z(v) {
                    frontier.extend(self.children(v).map(|c| (c, false)));
                }
                if opens_collider[v] {
                    frontier.extend(self.parents(v).map(|p| (p, true)));
                }
            }
        }
        Ok(true)
    }

    pub fn fingerprint(&self) -> Fingerprint {
        let mut skeleton = Vec::new();
        for a in 0..self.n {
            for b in a + 1..self.n {
                if self.adjacent(a, b) {
                    skeleton.push((a, b));
                }
            }
        }
        let mut vstructures = Vec::new();
        for c in 0..self.n {
            let ps: Vec<usize> = self.parents(c).collect();
            for (i, &a) in ps.iter().enumerate() {
                for &b in &ps[i + 1..] {
                    if !self.adjacent(a, b) {
                        vstructures.push((a, c, b));
                    }
                }
            }
        }
        vstructures.sort_unstable();
        Fingerprint { skeleton, vstructures }
    }

    /// Markov equivalence test.
    pub fn same_model(&self, other: &Dag) -> Result<bool> {
        if self.n != other.n {
            return Err(Error::SizeMismatch { expected: self.n, found: other.n });
        }
        Ok(self.fingerprint() == other.fingerprint())
    }

    /// Graphviz rendering for debugging. Node labels default to indices.
    pub fn to_dot(&self, names: Option<&[String]>) -> String {
        let mut s = String::from("digraph G {\n");
        for v in 0..self.n {
            match names.and_then(|ns| ns.get(v)) {
                Some(name) => {
                    let _ = writeln!(s, "  {v} [label=\"{}\"];", name.replace('"', "\\\""));
                }
                None => {
                    let _ = writeln!(s, "  {v};");
                }
            }
        }
        for a in self.arcs() {
            let _ = writeln!(s, "  {} -> {};", a.tail, a.head);
        }
        s.push_str("}\n");
        s
    }

    // In-place edits used by the search loop.

    /// Adds `a`, maintaining the closure incrementally.
    pub(crate) fn insert_arc(&mut self, a: Arc) -> Result<()> {
        self.check_arc(a)?;
        if self.adjacent(a.tail, a.head) {
            return Err(Error::Adjacent(a.tail, a.head));
        }
        if self.descendants.get(a.head, a.tail) {
            return Err(Error::Cycle { tail: a.tail, head: a.head });
        }
        self.children.set(a.tail, a.head, true);
        self.parents.set(a.head, a.tail, true);
        // Everything that reaches `tail` (and `tail` itself) now reaches
        // `head` and all of its descendants.
        let mut gained: Vec<u64> = self.descendants.row(a.head).to_vec();
        gained[a.head / 64] |= 1 << (a.head % 64);
        for u in 0..self.n {
            if u == a.tail || self.descendants.get(u, a.tail) {
                for (w, g) in self.descendants.row_mut(u).iter_mut().zip(&gained) {
                    *w |= g;
                }
            }
        }
        Ok(())
    }

    pub(crate) fn delete_arc(&mut self, a: Arc) -> Result<()> {
        self.check_arc(a)?;
        if !self.has_arc(a.tail, a.head) {
            return Err(Error::MissingArc { tail: a.tail, head: a.head });
        }
        self.children.set(a.tail, a.head, false);
        self.parents.set(a.head, a.tail, false);
        self.recompute_descendants();
        Ok(())
    }

    pub(crate) fn flip_covered(&mut self, a: Arc) -> Result<()> {
        if !self.is_covered(a)? {
            return Err(Error::NotCovered { tail: a.tail, head: a.head });
        }
        self.flip_unchecked(a);
        Ok(())
    }

    fn flip_unchecked(&mut self, a: Arc) {
        self.children.set(a.tail, a.head, false);
        self.parents.set(a.head, a.tail, false);
        self.children.set(a.head, a.tail, true);
        self.parents.set(a.tail, a.head, true);
        self.recompute_descendants();
    }

    /// Returns the arc that was reversed, in its original orientation.
    pub(crate) fn apply_random_car<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<Arc> {
        let covered = self.covered_arcs();
        if covered.is_empty() {
            return None;
        }
        let a = covered[uniform_index(rng, covered.len())];
        self.flip_unchecked(a);
        Some(a)
    }

    /// Like `apply_random_car`, but staying put is one more equally likely
    /// outcome. The walk is then aperiodic, so a fixed number of steps can
    /// end on any member of the class.
    pub(crate) fn apply_lazy_car<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<Arc> {
        let covered = self.covered_arcs();
        let i = uniform_index(rng, covered.len() + 1);
        let a = *covered.get(i)?;
        self.flip_unchecked(a);
        Some(a)
    }

    fn recompute_descendants(&mut self) {
        self.descendants.clear();
        let order = self.causal_order();
        for &v in order.iter().rev() {
            let kids: Vec<usize> = self.children(v).collect();
            for c in kids {
                self.descendants.set(v, c, true);
                self.descendants.or_row_into(c, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    // Trap group labels.
    const X: usize = 0;
    const Y: usize = 1;
    const Z: usize = 2;
    const U: usize = 3;

    fn g1() -> Dag {
        Dag::from_arcs(4, [(X, Y), (X, U), (Y, Z), (U, Z), (Y, U)]).unwrap()
    }

    fn g2() -> Dag {
        Dag::from_arcs(4, [(X, Y), (X, U), (Y, Z), (Z, U), (X, Z)]).unwrap()
    }

    fn chain() -> Dag {
        Dag::from_arcs(3, [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn add_single_arc() {
        let g = Dag::empty(2).add_arc(Arc::new(0, 1)).unwrap();
        assert!(g.has_arc(0, 1));
        assert!(g.is_descendant(0, 1));
        assert!(!g.is_descendant(1, 0));
    }

    #[test]
    fn add_closing_arc_is_a_cycle() {
        assert_eq!(chain().add_arc(Arc::new(2, 0)), Err(Error::Cycle { tail: 2, head: 0 }));
    }

    #[test]
    fn add_shortcut_keeps_closure() {
        let g = chain().add_arc(Arc::new(0, 2)).unwrap();
        assert!(g.is_descendant(0, 1) && g.is_descendant(0, 2) && g.is_descendant(1, 2));
        assert!(!g.is_descendant(2, 0) && !g.is_descendant(1, 0));
    }

    #[test]
    fn add_adjacent_rejected() {
        assert_eq!(chain().add_arc(Arc::new(1, 0)), Err(Error::Adjacent(1, 0)));
        assert!(matches!(chain().add_arc(Arc::new(1, 1)), Err(Error::InvalidArc { .. })));
    }

    #[test]
    fn remove_arcs() {
        let g = Dag::from_arcs(2, [(0, 1)]).unwrap().remove_arc(Arc::new(0, 1)).unwrap();
        assert_eq!(g, Dag::empty(2));

        let tri = Dag::from_arcs(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let g = tri.remove_arc(Arc::new(0, 2)).unwrap();
        assert!(g.is_descendant(0, 2));

        let g = chain().remove_arc(Arc::new(0, 1)).unwrap();
        assert!(!g.is_descendant(0, 2));
        assert_eq!(chain().remove_arc(Arc::new(0, 2)), Err(Error::MissingArc { tail: 0, head: 2 }));
    }

    #[test]
    fn covered_arcs_of_example_graphs() {
        let single = Dag::from_arcs(2, [(0, 1)]).unwrap();
        assert!(single.is_covered(Arc::new(0, 1)).unwrap());
        assert!(g1().is_covered(Arc::new(Y, U)).unwrap());
        assert!(!g2().is_covered(Arc::new(X, Z)).unwrap());
        assert!(matches!(g2().is_covered(Arc::new(Z, X)), Err(Error::MissingArc { .. })));
    }

    #[test]
    fn reverse_covered() {
        let single = Dag::from_arcs(2, [(0, 1)]).unwrap();
        let r = single.reverse_covered_arc(Arc::new(0, 1)).unwrap();
        assert!(r.has_arc(1, 0) && !r.has_arc(0, 1));
        assert_eq!(r.fingerprint(), single.fingerprint());

        let r = g1().reverse_covered_arc(Arc::new(Y, U)).unwrap();
        let expect = Dag::from_arcs(4, [(X, Y), (X, U), (U, Z), (Y, Z), (U, Y)]).unwrap();
        assert_eq!(r, expect);
        assert_eq!(r.fingerprint(), g1().fingerprint());

        assert_eq!(g2().reverse_covered_arc(Arc::new(X, Z)), Err(Error::NotCovered { tail: X, head: Z }));
    }

    #[test]
    fn random_car_cases() {
        let mut rng = seeded(1);
        assert_eq!(Dag::empty(3).random_car(&mut rng), Dag::empty(3));
        let collider = Dag::from_arcs(3, [(0, 2), (1, 2)]).unwrap();
        assert_eq!(collider.random_car(&mut rng), collider);
        let single = Dag::from_arcs(2, [(0, 1)]).unwrap();
        for _ in 0..5 {
            assert_eq!(single.random_car(&mut rng), Dag::from_arcs(2, [(1, 0)]).unwrap());
        }
    }

    #[test]
    fn causal_orders() {
        assert_eq!(Dag::empty(3).causal_order(), vec![0, 1, 2]);
        let c = Dag::from_arcs(3, [(2, 1), (1, 0)]).unwrap();
        assert_eq!(c.causal_order(), vec![2, 1, 0]);
        let g = g1();
        let order = g.causal_order();
        let pos = |v: usize| order.iter().position(|&o| o == v).unwrap();
        for a in g.arcs() {
            assert!(pos(a.tail) < pos(a.head));
        }
    }

    #[test]
    fn d_separation_basics() {
        let c = chain();
        assert!(c.d_separated(&[0], &[2], &[1]).unwrap());
        assert!(!c.d_separated(&[0], &[2], &[]).unwrap());
        let collider = Dag::from_arcs(3, [(0, 2), (1, 2)]).unwrap();
        assert!(collider.d_separated(&[0], &[1], &[]).unwrap());
        assert!(!collider.d_separated(&[0], &[1], &[2]).unwrap());
        assert!(g1().d_separated(&[X], &[Z], &[Y, U]).unwrap());
        assert_eq!(c.d_separated(&[0], &[0], &[]), Err(Error::Overlap));
        assert_eq!(c.d_separated(&[0], &[2], &[0]), Err(Error::Overlap));
        assert_eq!(c.d_separated(&[], &[2], &[]), Err(Error::EmptySet));
    }

    #[test]
    fn collider_opened_by_descendant() {
        let g = Dag::from_arcs(4, [(0, 2), (1, 2), (2, 3)]).unwrap();
        assert!(!g.d_separated(&[0], &[1], &[3]).unwrap());
    }

    #[test]
    fn fingerprints() {
        let a = Dag::from_arcs(3, [(0, 1), (1, 2)]).unwrap();
        let b = Dag::from_arcs(3, [(2, 1), (1, 0)]).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        let collider = Dag::from_arcs(3, [(0, 2), (1, 2)]).unwrap();
        let f = collider.fingerprint();
        assert_eq!(f.skeleton, vec![(0, 2), (1, 2)]);
        assert_eq!(f.vstructures, vec![(0, 2, 1)]);
        assert!(f.is_consistent());
        assert_ne!(g1().fingerprint(), g2().fingerprint());
    }

    #[test]
    fn same_model_cases() {
        let g = g1();
        assert!(g.same_model(&g).unwrap());
        let xy = Dag::from_arcs(2, [(0, 1)]).unwrap();
        let yx = Dag::from_arcs(2, [(1, 0)]).unwrap();
        assert!(xy.same_model(&yx).unwrap());
        assert!(!xy.same_model(&Dag::empty(2)).unwrap());
        assert!(matches!(xy.same_model(&Dag::empty(3)), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn dot_export() {
        let names: Vec<String> = ["A", "B"].iter().map(|s| String::from(*s)).collect();
        let dot = Dag::from_arcs(2, [(0, 1)]).unwrap().to_dot(Some(&names));
        assert!(dot.contains("0 [label=\"A\"];"));
        assert!(dot.contains("0 -> 1;"));
    }

    #[test]
    fn wide_graphs_cross_word_boundaries() {
        let n = 130;
        let g = Dag::from_arcs(n, (0..n - 1).map(|i| (i, i + 1))).unwrap();
        assert!(g.is_descendant(0, 129));
        assert!(g.add_arc(Arc::new(129, 0)).is_err());
        assert!(g.is_covered(Arc::new(0, 1)).unwrap());
        assert!(!g.is_covered(Arc::new(70, 71)).unwrap());
        let r = g.reverse_covered_arc(Arc::new(0, 1)).unwrap();
        assert_eq!(r.fingerprint(), g.fingerprint());
    }
}
