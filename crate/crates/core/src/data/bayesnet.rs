use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{draw_categorical, Dataset, JointTable, Variable};
use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::rng::{seeded, unit};

/// Largest joint table [`BayesNet::joint_table`] will materialise.
const MAX_JOINT_CELLS: usize = 1 << 24;

/// Tolerance on the row sums of every conditional distribution.
const ROW_SUM_TOL: f64 = 1e-12;

/// A DAG with one conditional probability table per node.
///
/// `cpts[x]` is row-major: one row per parent configuration (mixed radix,
/// ascending parent index, lowest index most significant), each row a
/// distribution over the states of `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct BayesNet {
    variables: Vec<Variable>,
    dag: Dag,
    cpts: Vec<Vec<f64>>,
}

impl BayesNet {
    pub fn new(variables: Vec<Variable>, dag: Dag, cpts: Vec<Vec<f64>>) -> Result<Self> {
        let n = variables.len();
        if dag.node_count() != n {
            return Err(Error::SizeMismatch { expected: n, found: dag.node_count() });
        }
        if cpts.len() != n {
            return Err(Error::SizeMismatch { expected: n, found: cpts.len() });
        }
        for (x, var) in variables.iter().enumerate() {
            let r = var.cardinality();
            if r == 0 {
                return Err(Error::InvalidData(format!("variable {} has no states", var.name)));
            }
            let q: usize = dag.parents(x).map(|p| variables[p].cardinality()).product();
            if cpts[x].len() != q * r {
                return Err(Error::InvalidData(format!(
                    "table for {} has {} entries, expected {}",
                    var.name,
                    cpts[x].len(),
                    q * r
                )));
            }
            for (j, row) in cpts[x].chunks_exact(r).enumerate() {
                if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(Error::InvalidData(format!(
                        "table for {} row {j} has a negative or non-finite entry",
                        var.name
                    )));
                }
                let s: f64 = row.iter().sum();
                if (s - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::InvalidData(format!("table for {} row {j} sums to {s}", var.name)));
                }
            }
        }
        Ok(Self { variables, dag, cpts })
    }

    /// Random positive parameterisation: every entry is drawn uniformly from
    /// `[floor, 1)` before normalising each row.
    pub fn random(variables: Vec<Variable>, dag: Dag, floor: f64, seed: u64) -> Result<Self> {
        let mut rng = seeded(seed);
        let cpts = (0..variables.len())
            .map(|x| {
                let r = variables[x].cardinality();
                let q: usize = dag.parents(x).map(|p| variables[p].cardinality()).product();
                let mut table = Vec::with_capacity(q * r);
                for _ in 0..q {
                    let row: Vec<f64> = (0..r).map(|_| floor + (1.0 - floor) * unit(&mut rng)).collect();
                    let s: f64 = row.iter().sum();
                    table.extend(row.iter().map(|p| p / s));
                }
                table
            })
            .collect();
        Self::new(variables, dag, cpts)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn cpt(&self, node: usize) -> &[f64] {
        &self.cpts[node]
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.variables.iter().map(Variable::cardinality).collect()
    }

    /// Parent-configuration index of `node` under a full assignment.
    pub fn parent_config<T: Copy + Into<usize>>(&self, node: usize, values: &[T]) -> usize {
        self.dag.parents(node).fold(0, |acc, p| acc * self.variables[p].cardinality() + values[p].into())
    }

    /// `p(node | parents)` for a given parent configuration.
    pub fn distribution(&self, node: usize, config: usize) -> &[f64] {
        let r = self.variables[node].cardinality();
        &self.cpts[node][config * r..(config + 1) * r]
    }

    /// The joint distribution as an explicit table.
    pub fn joint_table(&self) -> Result<JointTable> {
        let cards = self.cardinalities();
        let cells = cards
            .iter()
            .try_fold(1usize, |acc, &c| acc.checked_mul(c))
            .filter(|&c| c <= MAX_JOINT_CELLS)
            .ok_or(Error::TooManyConfigurations)?;
        let mut probs = vec![0.0; cells];
        let mut assignment = vec![0usize; cards.len()];
        for (cell, p) in probs.iter_mut().enumerate() {
            let mut rest = cell;
            for v in (0..cards.len()).rev() {
                assignment[v] = rest % cards[v];
                rest /= cards[v];
            }
            *p = (0..cards.len())
                .map(|x| {
                    let j = self.parent_config(x, &assignment);
                    self.distribution(x, j)[assignment[x]]
                })
                .product();
        }
        JointTable::normalized(self.variables.clone(), probs)
    }

    fn sample_row<R: Rng + ?Sized>(&self, rng: &mut R, order: &[usize], row: &mut [u16]) {
        for &x in order {
            let j = self.parent_config(x, row);
            row[x] = draw_categorical(rng, self.distribution(x, j)) as u16;
        }
    }
}

/// `rows` i.i.d. ancestral samples, deterministic in `seed`.
pub fn forward_sample(bn: &BayesNet, rows: usize, seed: u64) -> Result<Dataset> {
    let mut rng = seeded(seed);
    let order = bn.dag.causal_order();
    let n = bn.variables.len();
    let mut columns: Vec<Vec<u16>> = (0..n).map(|_| Vec::with_capacity(rows)).collect();
    let mut row = vec![0u16; n];
    for _ in 0..rows {
        bn.sample_row(&mut rng, &order, &mut row);
        for (c, &x) in columns.iter_mut().zip(&row) {
            c.push(x);
        }
    }
    if rows == 0 {
        return Dataset::empty(bn.variables.clone());
    }
    Dataset::from_columns(bn.variables.clone(), columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::family_counts;

    fn binary(names: &[&str]) -> Vec<Variable> {
        names.iter().map(|n| Variable::with_cardinality(*n, 2)).collect()
    }

    fn chain_bn(agree: f64) -> BayesNet {
        let dag = Dag::from_arcs(2, [(0, 1)]).unwrap();
        BayesNet::new(binary(&["X", "Y"]), dag, vec![vec![0.5, 0.5], vec![agree, 1.0 - agree, 1.0 - agree, agree]])
            .unwrap()
    }

    #[test]
    fn validates_shapes_and_sums() {
        let dag = Dag::from_arcs(2, [(0, 1)]).unwrap();
        let short = BayesNet::new(binary(&["X", "Y"]), dag.clone(), vec![vec![0.5, 0.5], vec![1.0, 0.0]]);
        assert!(matches!(short, Err(Error::InvalidData(_))));
        let bad_sum = BayesNet::new(binary(&["X", "Y"]), dag, vec![vec![0.5, 0.6], vec![1.0, 0.0, 0.0, 1.0]]);
        assert!(matches!(bad_sum, Err(Error::InvalidData(_))));
    }

    #[test]
    fn zero_rows_keep_schema() {
        let d = forward_sample(&chain_bn(0.9), 0, 1).unwrap();
        assert_eq!(d.n_rows(), 0);
        assert_eq!(d.n_vars(), 2);
    }

    #[test]
    fn deterministic_tables_give_constant_rows() {
        let dag = Dag::from_arcs(2, [(0, 1)]).unwrap();
        let bn = BayesNet::new(binary(&["X", "Y"]), dag, vec![vec![0.0, 1.0], vec![1.0, 0.0, 1.0, 0.0]]).unwrap();
        let d = forward_sample(&bn, 100, 3).unwrap();
        assert!((0..100).all(|r| d.row(r) == vec![1, 0]));
    }

    #[test]
    fn agreement_frequency_converges() {
        let d = forward_sample(&chain_bn(0.9), 20_000, 11).unwrap();
        let same = (0..d.n_rows()).filter(|&r| d.value(r, 0) == d.value(r, 1)).count();
        let freq = same as f64 / 20_000.0;
        assert!((freq - 0.9).abs() < 0.01, "{freq}");
    }

    #[test]
    fn same_seed_same_data() {
        let bn = chain_bn(0.7);
        assert_eq!(forward_sample(&bn, 50, 9).unwrap(), forward_sample(&bn, 50, 9).unwrap());
        assert_ne!(forward_sample(&bn, 50, 9).unwrap(), forward_sample(&bn, 50, 10).unwrap());
    }

    #[test]
    fn joint_table_of_chain() {
        let j = chain_bn(0.9).joint_table().unwrap();
        assert!((j.probabilities()[0] - 0.45).abs() < 1e-15);
        assert!((j.probabilities()[1] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn empirical_conditionals_match_tables() {
        let bn = chain_bn(0.8);
        let d = forward_sample(&bn, 40_000, 5).unwrap();
        let fc = family_counts(&d, 1, &[0]).unwrap();
        for j in 0..2u128 {
            let p = fc.count(j, 0) as f64 / fc.config_total(j) as f64;
            assert!((p - bn.distribution(1, j as usize)[0]).abs() < 0.01);
        }
    }
}
