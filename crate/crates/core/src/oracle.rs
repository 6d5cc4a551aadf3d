//! Brute-force ground truth on small domains.
//!
//! Everything here enumerates: all labelled DAGs on up to five nodes, their
//! Markov equivalence classes, exact inclusion boundaries, and exact
//! conditional-independence tests on explicit joint tables.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use crate::cache::ScoreCache;
use crate::data::{Dataset, JointTable};
use crate::error::{Error, Result};
use crate::graph::{Arc, Dag, Fingerprint};
use crate::score::{dag_score, ScoreKind};
use crate::search::score_tolerance;

/// Largest node count for DAG enumeration.
pub const MAX_ENUM_NODES: usize = 5;
/// Largest node count for inclusion-optimality and local-optimum checks.
pub const MAX_CHECK_NODES: usize = 4;
/// Tolerance for membership tests on fitted tables.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// All labelled DAGs on `n` nodes.
///
/// Each unordered pair is absent, forward or backward; candidates are
/// visited in base-3 counting order over pairs `(0,1), (0,2), ..., (n-2,n-1)`
/// and cyclic ones are dropped.
pub fn enumerate_dags(n: usize) -> Result<Vec<Dag>> {
    if n > MAX_ENUM_NODES {
        return Err(Error::TooLarge { n, limit: MAX_ENUM_NODES });
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let total = 3usize.pow(pairs.len() as u32);
    let mut out = Vec::new();
    'codes: for mut code in 0..total {
        let mut g = Dag::empty(n);
        for &(a, b) in &pairs {
            let arc = match code % 3 {
                0 => None,
                1 => Some(Arc::new(a, b)),
                _ => Some(Arc::new(b, a)),
            };
            code /= 3;
            if let Some(arc) = arc {
                if g.insert_arc(arc).is_err() {
                    continue 'codes;
                }
            }
        }
        out.push(g);
    }
    Ok(out)
}

/// Fingerprints reachable from any DAG in `members` by one legal arc addition
/// or removal, excluding the class itself.
fn boundary_of(members: &[Dag], own: &Fingerprint) -> BTreeSet<Fingerprint> {
    let mut ib = BTreeSet::new();
    for g in members {
        let n = g.node_count();
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                let next =
                    if g.has_arc(a, b) { g.remove_arc(Arc::new(a, b)).ok() } else { g.add_arc(Arc::new(a, b)).ok() };
                if let Some(h) = next {
                    let f = h.fingerprint();
                    if &f != own {
                        ib.insert(f);
                    }
                }
            }
        }
    }
    ib
}

/// One Markov equivalence class.
#[derive(Clone, Debug)]
pub struct ModelClass {
    /// Member DAGs in enumeration order.
    pub members: Vec<Dag>,
    /// Exact inclusion boundary.
    pub ib: BTreeSet<Fingerprint>,
    pub score: Option<f64>,
}

impl ModelClass {
    pub fn representative(&self) -> &Dag {
        &self.members[0]
    }
}

/// Every equivalence class on `n` nodes with its exact inclusion boundary.
#[derive(Clone, Debug)]
pub struct ModelAtlas {
    n: usize,
    classes: BTreeMap<Fingerprint, ModelClass>,
}

impl ModelAtlas {
    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &BTreeMap<Fingerprint, ModelClass> {
        &self.classes
    }

    pub fn class(&self, f: &Fingerprint) -> Option<&ModelClass> {
        self.classes.get(f)
    }

    /// `M2 ∈ IB(M1) ⇔ M1 ∈ IB(M2)` across the atlas.
    pub fn is_ib_symmetric(&self) -> bool {
        self.classes
            .iter()
            .all(|(f, c)| c.ib.iter().all(|g| self.classes.get(g).is_some_and(|other| other.ib.contains(f))))
    }

    /// Whether reversing any covered arc of any member yields another member.
    pub fn is_car_closed(&self) -> bool {
        self.classes.values().all(|c| {
            let keys: BTreeSet<Vec<Arc>> = c.members.iter().map(Dag::arcs).collect();
            c.members.iter().all(|g| {
                g.covered_arcs().into_iter().all(|a| g.reverse_covered_arc(a).is_ok_and(|h| keys.contains(&h.arcs())))
            })
        })
    }

    /// Scores every class on `data` through its representative.
    pub fn score_all(&mut self, data: &Dataset, kind: ScoreKind) -> Result<()> {
        if data.n_vars() != self.n {
            return Err(Error::SizeMismatch { expected: self.n, found: data.n_vars() });
        }
        let mut cache = ScoreCache::new();
        for c in self.classes.values_mut() {
            c.score = Some(dag_score(c.representative(), data, kind, &mut cache)?);
        }
        Ok(())
    }
}

/// Groups all DAGs on `n` nodes into classes and computes exact boundaries.
pub fn enumerate_classes(n: usize) -> Result<ModelAtlas> {
    let mut classes: BTreeMap<Fingerprint, ModelClass> = BTreeMap::new();
    for g in enumerate_dags(n)? {
        classes
            .entry(g.fingerprint())
            .or_insert_with(|| ModelClass { members: Vec::new(), ib: BTreeSet::new(), score: None })
            .members
            .push(g);
    }
    for (f, c) in classes.iter_mut() {
        c.ib = boundary_of(&c.members, f);
    }
    let atlas = ModelAtlas { n, classes };
    debug_assert!(atlas.is_car_closed());
    Ok(atlas)
}

/// DAGs reachable from `g` by repeated covered-arc reversals, `g` included.
pub fn car_closure(g: &Dag) -> Vec<Dag> {
    let mut seen: BTreeSet<Vec<Arc>> = BTreeSet::new();
    seen.insert(g.arcs());
    let mut out = vec![g.clone()];
    let mut i = 0;
    while i < out.len() {
        let cur = out[i].clone();
        for a in cur.covered_arcs() {
            let h = cur.reverse_covered_arc(a).expect("covered arc");
            if seen.insert(h.arcs()) {
                out.push(h);
            }
        }
        i += 1;
    }
    out
}

/// The exact inclusion boundary of class `f`.
pub fn exact_ib<'a>(atlas: &'a ModelAtlas, f: &Fingerprint) -> Result<&'a BTreeSet<Fingerprint>> {
    atlas.class(f).map(|c| &c.ib).ok_or(Error::UnknownClass)
}

/// Whether `xs ⊥⊥ ys | zs` holds in `table`: for every `z` with `p(z) > 0`,
/// `max |p(x, y | z) - p(x | z) p(y | z)| < tol`. Empty `xs` or `ys` hold
/// trivially.
pub fn exact_ci(table: &JointTable, xs: &[usize], ys: &[usize], zs: &[usize], tol: f64) -> Result<bool> {
    let mut all: Vec<usize> = Vec::with_capacity(xs.len() + ys.len() + zs.len());
    all.extend_from_slice(xs);
    all.extend_from_slice(ys);
    all.extend_from_slice(zs);
    let m = table.marginal(&all)?;
    if xs.is_empty() || ys.is_empty() {
        return Ok(true);
    }
    let cards = table.cardinalities();
    let size = |vs: &[usize]| vs.iter().map(|&v| cards[v]).product::<usize>();
    let (nx, ny, nz) = (size(xs), size(ys), size(zs));
    let at = |x: usize, y: usize, z: usize| m[(x * ny + y) * nz + z];
    for z in 0..nz {
        let mut pz = 0.0;
        let mut pxz = vec![0.0; nx];
        let mut pyz = vec![0.0; ny];
        for (x, px) in pxz.iter_mut().enumerate() {
            for (y, py) in pyz.iter_mut().enumerate() {
                let p = at(x, y, z);
                pz += p;
                *px += p;
                *py += p;
            }
        }
        if pz <= 0.0 {
            continue;
        }
        for (x, px) in pxz.iter().enumerate() {
            for (y, py) in pyz.iter().enumerate() {
                let dev = (at(x, y, z) / pz - (px / pz) * (py / pz)).abs();
                if dev.is_nan() || dev >= tol {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// A conditional-independence statement `x ⊥⊥ y | z` over node bitmasks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CiTriple {
    pub x: u32,
    pub y: u32,
    pub z: u32,
}

fn members(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask >> i & 1 == 1).collect()
}

impl CiTriple {
    pub fn sets(&self) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        (members(self.x), members(self.y), members(self.z))
    }
}

/// Every statement with disjoint `x`, `y`, `z`, `x` and `y` non-empty, listed
/// once per symmetric pair (the side holding the smallest node is `x`).
pub fn ci_triples(n: usize) -> Vec<CiTriple> {
    let mut out = Vec::new();
    let total = 4usize.pow(n as u32);
    for mut code in 0..total {
        let (mut x, mut y, mut z) = (0u32, 0u32, 0u32);
        for v in 0..n {
            match code % 4 {
                1 => x |= 1 << v,
                2 => y |= 1 << v,
                3 => z |= 1 << v,
                _ => {}
            }
            code /= 4;
        }
        if x != 0 && y != 0 && x.trailing_zeros() < y.trailing_zeros() {
            out.push(CiTriple { x, y, z });
        }
    }
    out.sort_unstable();
    out
}

/// Statements d-separation implies in `g`.
pub fn dsep_statements(g: &Dag, triples: &[CiTriple]) -> BTreeSet<CiTriple> {
    triples
        .iter()
        .filter(|t| {
            let (x, y, z) = t.sets();
            g.d_separated(&x, &y, &z).unwrap_or(false)
        })
        .copied()
        .collect()
}

/// Models that include `table` and strictly include no other model that
/// does. Model inclusion is read from containment of d-separation
/// statements.
pub fn inclusion_optimal_models(table: &JointTable) -> Result<BTreeSet<Fingerprint>> {
    let n = table.n_vars();
    if n > MAX_CHECK_NODES {
        return Err(Error::TooLarge { n, limit: MAX_CHECK_NODES });
    }
    let atlas = enumerate_classes(n)?;
    let triples = ci_triples(n);
    let mut holds = BTreeSet::new();
    for t in &triples {
        let (x, y, z) = t.sets();
        if exact_ci(table, &x, &y, &z, MEMBERSHIP_TOL)? {
            holds.insert(*t);
        }
    }
    let including: Vec<(&Fingerprint, BTreeSet<CiTriple>)> = atlas
        .classes()
        .iter()
        .map(|(f, c)| (f, dsep_statements(c.representative(), &triples)))
        .filter(|(_, stmts)| stmts.is_subset(&holds))
        .collect();
    Ok(including
        .iter()
        .filter(|(_, mine)| {
            // A strictly smaller model has a strictly larger statement set.
            !including.iter().any(|(_, other)| other.len() > mine.len() && mine.is_subset(other))
        })
        .map(|(f, _)| (*f).clone())
        .collect())
}

/// Local optima of a scored atlas.
#[derive(Clone, Debug, Default)]
pub struct LocalOptima {
    /// Classes scoring at least as high as every boundary neighbour.
    pub weak: BTreeSet<Fingerprint>,
    /// Classes scoring strictly higher than every boundary neighbour.
    pub strict: BTreeSet<Fingerprint>,
    pub scores: BTreeMap<Fingerprint, f64>,
}

/// Scores every class of `atlas` on `data` and collects the local optima.
/// Ties within the search's score tolerance are not strict.
pub fn local_optima(atlas: &ModelAtlas, data: &Dataset, kind: ScoreKind) -> Result<LocalOptima> {
    if data.n_vars() != atlas.n {
        return Err(Error::SizeMismatch { expected: atlas.n, found: data.n_vars() });
    }
    if atlas.n > MAX_ENUM_NODES {
        return Err(Error::TooLarge { n: atlas.n, limit: MAX_ENUM_NODES });
    }
    let mut cache = ScoreCache::new();
    let mut scores = BTreeMap::new();
    for (f, c) in atlas.classes() {
        scores.insert(f.clone(), dag_score(c.representative(), data, kind, &mut cache)?);
    }
    let mut out = LocalOptima::default();
    for (f, c) in atlas.classes() {
        let s = scores[f];
        let best_neighbor = c.ib.iter().map(|g| scores[g]).fold(f64::NEG_INFINITY, f64::max);
        let tol = score_tolerance(s);
        if s >= best_neighbor - tol {
            out.weak.insert(f.clone());
        }
        if s > best_neighbor + tol {
            out.strict.insert(f.clone());
        }
    }
    out.scores = scores;
    Ok(out)
}

/// Whether `f` has no strictly better neighbour in `atlas` (scored on `data`).
pub fn has_improving_neighbor(
    atlas: &ModelAtlas,
    f: &Fingerprint,
    data: &Dataset,
    kind: ScoreKind,
    cache: &mut ScoreCache,
) -> Result<bool> {
    let class = atlas.class(f).ok_or(Error::UnknownClass)?;
    let s = dag_score(class.representative(), data, kind, cache)?;
    for g in &class.ib {
        let other = atlas.class(g).ok_or(Error::UnknownClass)?;
        let t = dag_score(other.representative(), data, kind, cache)?;
        if t > s + score_tolerance(s) {
            return Ok(true);
        }
    }
    Ok(false)
}
