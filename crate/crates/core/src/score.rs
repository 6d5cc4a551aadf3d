//! Decomposable, score-equivalent scores: BIC and BDeu.
//!
//! Natural logarithms throughout. BIC is the maximised log-likelihood minus
//! `(d / 2) ln N`, `d` the number of free parameters. BDeu spreads an
//! equivalent sample size `ess` uniformly over the `q × r` cells of each
//! family.

use alloc::format;
use alloc::vec::Vec;

use crate::cache::ScoreCache;
use crate::data::{family_counts, Dataset, FamilyCounts};
use crate::error::{Error, Result};
use crate::graph::Dag;

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum ScoreKind {
    #[default]
    Bic,
    Bdeu {
        ess: f64,
    },
}

impl ScoreKind {
    /// BDeu with the given equivalent sample size.
    pub fn bdeu(ess: f64) -> Result<Self> {
        let kind = ScoreKind::Bdeu { ess };
        kind.validate()?;
        Ok(kind)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ScoreKind::Bdeu { ess } if !(ess > 0.0 && ess.is_finite()) => {
                Err(Error::Domain(format!("equivalent sample size {ess}")))
            }
            _ => Ok(()),
        }
    }
}

#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// BIC contribution of one family. `total_rows` is `N` for the penalty.
pub fn family_score_bic(fc: &FamilyCounts, total_rows: usize) -> f64 {
    if total_rows == 0 {
        return 0.0;
    }
    let mut loglik = 0.0;
    for row in fc.observed() {
        let nj = row.total() as f64;
        for &c in &row.counts {
            if c > 0 {
                let c = c as f64;
                loglik += c * libm::log(c / nj);
            }
        }
    }
    let free = fc.parent_configs() as f64 * (fc.child_states() as f64 - 1.0);
    loglik - 0.5 * libm::log(total_rows as f64) * free
}

/// BDeu log marginal likelihood of one family. Unobserved parent
/// configurations contribute nothing.
pub fn family_score_bdeu(fc: &FamilyCounts, ess: f64) -> f64 {
    let q = fc.parent_configs() as f64;
    let r = fc.child_states() as f64;
    let a_j = ess / q;
    let a_jk = ess / (q * r);
    let lg_a_j = ln_gamma(a_j);
    let lg_a_jk = ln_gamma(a_jk);
    let mut s = 0.0;
    for row in fc.observed() {
        s += lg_a_j - ln_gamma(a_j + row.total() as f64);
        for &c in &row.counts {
            if c > 0 {
                s += ln_gamma(a_jk + c as f64) - lg_a_jk;
            }
        }
    }
    s
}

pub fn family_score(fc: &FamilyCounts, kind: ScoreKind, total_rows: usize) -> f64 {
    match kind {
        ScoreKind::Bic => family_score_bic(fc, total_rows),
        ScoreKind::Bdeu { ess } => family_score_bdeu(fc, ess),
    }
}

/// Scores a family straight from data.
///
/// Families whose configuration count overflows the tally are infeasible and
/// score `-inf`.
pub fn compute_family(data: &Dataset, kind: ScoreKind, child: usize, parents: &[usize]) -> f64 {
    match family_counts(data, child, parents) {
        Ok(fc) => family_score(&fc, kind, data.n_rows()),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Family score of `child` under the parents it has in `g`, through `cache`.
pub(crate) fn cached_family(g: &Dag, child: usize, data: &Dataset, kind: ScoreKind, cache: &mut ScoreCache) -> f64 {
    cache.get_or_compute_sorted(child, g.parents(child), || {
        let ps: Vec<usize> = g.parents(child).collect();
        compute_family(data, kind, child, &ps)
    })
}

/// Sum of family scores in node order, each fetched through `cache`.
pub fn dag_score(g: &Dag, data: &Dataset, kind: ScoreKind, cache: &mut ScoreCache) -> Result<f64> {
    if g.node_count() != data.n_vars() {
        return Err(Error::SizeMismatch { expected: data.n_vars(), found: g.node_count() });
    }
    Ok((0..g.node_count()).map(|x| cached_family(g, x, data, kind, cache)).sum())
}

/// Free parameters of `g`: `Σ (r_X - 1) Π_{P ∈ Pa(X)} r_P`, saturating.
pub fn dimension(g: &Dag, cardinalities: &[usize]) -> Result<u128> {
    if g.node_count() != cardinalities.len() {
        return Err(Error::SizeMismatch { expected: cardinalities.len(), found: g.node_count() });
    }
    Ok((0..g.node_count())
        .map(|x| {
            g.parents(x).fold((cardinalities[x] as u128).saturating_sub(1), |acc, p| {
                acc.saturating_mul(cardinalities[p] as u128)
            })
        })
        .fold(0u128, u128::saturating_add))
}
