use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{Dataset, Variable};
use crate::error::{Error, Result};
use crate::rng::{seeded, unit};

/// Default convergence tolerance of [`ipf_fit`].
pub const IPF_TOL: f64 = 1e-10;
/// Default sweep cap of [`ipf_fit`].
pub const IPF_MAX_ITER: usize = 100_000;

const MASS_TOL: f64 = 1e-12;

/// Explicit joint distribution over the Cartesian product of its variables.
///
/// Cells are row-major: the last variable varies fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct JointTable {
    variables: Vec<Variable>,
    probs: Vec<f64>,
}

impl JointTable {
    pub fn new(variables: Vec<Variable>, probs: Vec<f64>) -> Result<Self> {
        let cells: usize = variables.iter().map(Variable::cardinality).product();
        if probs.len() != cells {
            return Err(Error::SizeMismatch { expected: cells, found: probs.len() });
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidData("negative or non-finite probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidData(format!("total mass {total} differs from 1")));
        }
        Ok(Self { variables, probs })
    }

    /// Rescales `weights` to unit mass.
    pub fn normalized(variables: Vec<Variable>, mut weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidData("weights have no positive finite mass".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Self::new(variables, weights)
    }

    pub fn uniform(variables: Vec<Variable>) -> Self {
        let cells: usize = variables.iter().map(Variable::cardinality).product();
        Self { variables, probs: vec![1.0 / cells as f64; cells] }
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.variables.iter().map(Variable::cardinality).collect()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// Returns a copy with the variables renamed.
    pub fn with_variables(mut self, variables: Vec<Variable>) -> Result<Self> {
        if variables.iter().map(Variable::cardinality).ne(self.cardinalities()) {
            return Err(Error::InvalidData("renamed variables change cardinalities".into()));
        }
        self.variables = variables;
        Ok(self)
    }

    /// State of every variable in `cell`.
    pub fn decode(&self, cell: usize) -> Vec<usize> {
        let cards = self.cardinalities();
        let mut out = vec![0; cards.len()];
        let mut rest = cell;
        for v in (0..cards.len()).rev() {
            out[v] = rest % cards[v];
            rest /= cards[v];
        }
        out
    }

    /// For each cell, its index in the row-major table over `vars`.
    fn projection(&self, vars: &[usize]) -> Vec<usize> {
        let cards = self.cardinalities();
        (0..self.probs.len())
            .map(|cell| {
                let a = self.decode(cell);
                vars.iter().fold(0, |acc, &v| acc * cards[v] + a[v])
            })
            .collect()
    }

    /// Marginal over `vars`, row-major in the order given.
    pub fn marginal(&self, vars: &[usize]) -> Result<Vec<f64>> {
        self.check_vars(vars)?;
        let cards = self.cardinalities();
        let size: usize = vars.iter().map(|&v| cards[v]).product();
        let mut out = vec![0.0; size];
        for (p, j) in self.probs.iter().zip(self.projection(vars)) {
            out[j] += p;
        }
        Ok(out)
    }

    fn check_vars(&self, vars: &[usize]) -> Result<()> {
        for (i, &v) in vars.iter().enumerate() {
            if v >= self.n_vars() {
                return Err(Error::Index { index: v, limit: self.n_vars() });
            }
            if vars[..i].contains(&v) {
                return Err(Error::Overlap);
            }
        }
        Ok(())
    }
}

/// Iterative proportional fitting from the uniform table.
///
/// Each sweep rescales the table once per clique so that its marginal matches
/// the target. Stops after the first sweep whose largest marginal deviation is
/// below `tol`.
pub fn ipf_fit(
    cardinalities: &[usize],
    cliques: &[Vec<usize>],
    targets: &[Vec<f64>],
    tol: f64,
    max_iter: usize,
) -> Result<JointTable> {
    if cliques.len() != targets.len() {
        return Err(Error::SizeMismatch { expected: cliques.len(), found: targets.len() });
    }
    let variables: Vec<Variable> =
        cardinalities.iter().enumerate().map(|(i, &c)| Variable::with_cardinality(format!("V{i}"), c)).collect();
    let mut table = JointTable::uniform(variables);
    let mut covered = vec![false; cardinalities.len()];
    let mut maps = Vec::with_capacity(cliques.len());
    for (clique, target) in cliques.iter().zip(targets) {
        table.check_vars(clique)?;
        let size: usize = clique.iter().map(|&v| cardinalities[v]).product();
        if target.len() != size {
            return Err(Error::SizeMismatch { expected: size, found: target.len() });
        }
        let mass: f64 = target.iter().sum();
        if target.iter().any(|t| *t < 0.0) || (mass - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidData("target marginal is not a distribution".into()));
        }
        clique.iter().for_each(|&v| covered[v] = true);
        maps.push(table.projection(clique));
    }
    if covered.iter().any(|c| !c) {
        return Err(Error::InvalidData("cliques do not cover every variable".into()));
    }

    let deviation = |table: &JointTable| {
        maps.iter()
            .zip(targets)
            .map(|(map, target)| {
                let mut m = vec![0.0; target.len()];
                for (p, &j) in table.probs.iter().zip(map) {
                    m[j] += p;
                }
                m.iter().zip(target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    };

    let mut dev = f64::INFINITY;
    for _ in 0..max_iter {
        for (map, target) in maps.iter().zip(targets) {
            let mut m = vec![0.0; target.len()];
            for (p, &j) in table.probs.iter().zip(map) {
                m[j] += p;
            }
            for (p, &j) in table.probs.iter_mut().zip(map) {
                *p = if m[j] > 0.0 { *p * target[j] / m[j] } else { 0.0 };
            }
        }
        dev = deviation(&table);
        if dev < tol {
            return Ok(table);
        }
    }
    Err(Error::Convergence { iterations: max_iter, deviation: dev })
}

/// `rows` i.i.d. draws from an explicit table.
pub fn sample_joint(table: &JointTable, rows: usize, seed: u64) -> Result<Dataset> {
    let mut rng = seeded(seed);
    let mut cumulative = Vec::with_capacity(table.probs.len());
    let mut acc = 0.0;
    for p in &table.probs {
        acc += p;
        cumulative.push(acc);
    }
    let last_positive = table.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let n = table.n_vars();
    let mut columns: Vec<Vec<u16>> = (0..n).map(|_| Vec::with_capacity(rows)).collect();
    for _ in 0..rows {
        let u = unit(&mut rng);
        let cell = cumulative.partition_point(|&c| c <= u).min(last_positive);
        for (c, s) in columns.iter_mut().zip(table.decode(cell)) {
            c.push(s as u16);
        }
    }
    if rows == 0 {
        return Dataset::empty(table.variables.clone());
    }
    Dataset::from_columns(table.variables.clone(), columns)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_singletons_fit_in_one_sweep() {
        let t = ipf_fit(&[2, 3], &[vec![0], vec![1]], &[vec![0.5; 2], vec![1.0 / 3.0; 3]], 1e-14, 1).unwrap();
        assert!(t.probabilities().iter().all(|p| (p - 1.0 / 6.0).abs() < 1e-15));
    }

    #[test]
    fn full_clique_reproduces_target() {
        let target = vec![0.1, 0.2, 0.3, 0.4];
        let t = ipf_fit(&[2, 2], &[vec![0, 1]], core::slice::from_ref(&target), 1e-14, 1).unwrap();
        for (a, b) in t.probabilities().iter().zip(&target) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn independent_product_marginals() {
        let t = ipf_fit(&[2, 2], &[vec![0], vec![1]], &[vec![0.3, 0.7], vec![0.6, 0.4]], 1e-12, 10).unwrap();
        assert!((t.probabilities()[0] - 0.18).abs() < 1e-12);
        assert!((t.marginal(&[1]).unwrap()[1] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn rejects_inconsistent_inputs() {
        assert!(matches!(ipf_fit(&[2, 2], &[vec![0]], &[vec![0.5, 0.5]], 1e-10, 10), Err(Error::InvalidData(_))));
        assert!(matches!(ipf_fit(&[2], &[vec![0]], &[vec![0.5, 0.6]], 1e-10, 10), Err(Error::InvalidData(_))));
        assert!(matches!(ipf_fit(&[2], &[vec![0]], &[vec![1.0]], 1e-10, 10), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn non_convergence_is_reported() {
        // Two incompatible targets for the same variable never agree.
        let r = ipf_fit(&[2], &[vec![0], vec![0]], &[vec![0.2, 0.8], vec![0.8, 0.2]], 1e-10, 5);
        assert!(matches!(r, Err(Error::Convergence { iterations: 5, .. })));
    }

    #[test]
    fn marginal_order_follows_request() {
        let vars = vec![Variable::with_cardinality("a", 2), Variable::with_cardinality("b", 2)];
        let t = JointTable::new(vars, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(t.marginal(&[1, 0]).unwrap(), vec![0.1, 0.3, 0.2, 0.4]);
        assert!(matches!(t.marginal(&[0, 0]), Err(Error::Overlap)));
    }

    #[test]
    fn sampling_point_mass_and_uniform() {
        let vars = vec![Variable::with_cardinality("a", 2), Variable::with_cardinality("b", 2)];
        let point = JointTable::new(vars.clone(), vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        let d = sample_joint(&point, 100, 1).unwrap();
        assert!((0..100).all(|r| d.row(r) == vec![1, 0]));
        assert_eq!(sample_joint(&point, 0, 1).unwrap().n_rows(), 0);

        let uniform = JointTable::uniform(vars);
        let d = sample_joint(&uniform, 40_000, 2).unwrap();
        let mut cells = [0usize; 4];
        for r in 0..d.n_rows() {
            cells[(d.value(r, 0) * 2 + d.value(r, 1)) as usize] += 1;
        }
        for c in cells {
            assert!((c as f64 / 40_000.0 - 0.25).abs() < 0.01);
        }
    }
}
