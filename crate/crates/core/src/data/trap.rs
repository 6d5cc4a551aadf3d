//! The four-variable distribution with two inclusion-optimal models and its
//! product ("Trap") extension.
//!
//! Variables in a group are `X` (four states) and the binary `Y`, `Z`, `U`,
//! at offsets 0, 1, 2, 3. The distribution is the positive joint that
//! factorises over the cycle `X - Y - Z - U - X` with the pairwise marginals
//! below; it is obtained by iterative proportional fitting from the uniform
//! table, which keeps every iterate inside the cycle's log-linear family.
//!
//! Marginal tables are read with the binary variable as the outer index: the
//! first four numbers of `p(XY)` are `p(X = x, Y = 0)` for `x = 0..4`.

use alloc::format;
use alloc::vec::Vec;

use super::{ipf_fit, Dataset, JointTable, Variable, IPF_MAX_ITER, IPF_TOL};
use crate::error::Result;
use crate::graph::Dag;
use crate::rng::{seeded, unit};

pub const X: usize = 0;
pub const Y: usize = 1;
pub const Z: usize = 2;
pub const U: usize = 3;

/// Nodes per group.
pub const GROUP: usize = 4;

/// `p(X = x, Y = y)` for `y = 0` then `y = 1`.
pub const P_XY: [[f64; 4]; 2] = [[0.22, 0.03, 0.22, 0.03], [0.03, 0.22, 0.03, 0.22]];
/// `p(X = x, U = u)` for `u = 0` then `u = 1`.
pub const P_XU: [[f64; 4]; 2] = [[0.22, 0.22, 0.03, 0.03], [0.03, 0.03, 0.22, 0.22]];
/// `p(Y, Z)`, also used for `p(U, Z)`.
pub const P_YZ: [[f64; 2]; 2] = [[0.35, 0.15], [0.15, 0.35]];

/// The two inclusion-optimal structures of one group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Optimum {
    /// `X→Y, X→U, Y→Z, U→Z, Y→U`: 19 free parameters, the global optimum.
    G1,
    /// `X→Y, X→U, Y→Z, Z→U, X→Z`: 23 free parameters.
    G2,
}

impl Optimum {
    pub const ALL: [Optimum; 2] = [Optimum::G1, Optimum::G2];

    pub fn arcs(self) -> [(usize, usize); 5] {
        match self {
            Optimum::G1 => [(X, Y), (X, U), (Y, Z), (U, Z), (Y, U)],
            Optimum::G2 => [(X, Y), (X, U), (Y, Z), (Z, U), (X, Z)],
        }
    }

    pub fn dag(self) -> Dag {
        Dag::from_arcs(GROUP, self.arcs()).expect("example structures are acyclic")
    }
}

/// Cardinalities of one group: `X` has four states, the rest two.
pub const CARDINALITIES: [usize; 4] = [4, 2, 2, 2];

/// Product structure choosing `choices[g]` for group `g`.
pub fn trap_dag(choices: &[Optimum]) -> Dag {
    let arcs = choices
        .iter()
        .enumerate()
        .flat_map(|(g, o)| o.arcs().into_iter().map(move |(t, h)| (g * GROUP + t, g * GROUP + h)));
    Dag::from_arcs(choices.len() * GROUP, arcs).expect("disjoint acyclic groups")
}

/// Variables of a `groups`-fold product, named `X1, Y1, Z1, U1, X2, ...`.
pub fn trap_variables(groups: usize) -> Vec<Variable> {
    (1..=groups)
        .flat_map(|g| {
            ["X", "Y", "Z", "U"]
                .into_iter()
                .zip(CARDINALITIES)
                .map(move |(name, card)| Variable::with_cardinality(format!("{name}{g}"), card))
        })
        .collect()
}

/// The four edge cliques and their target marginals.
pub fn trap_group_targets() -> (Vec<Vec<usize>>, Vec<Vec<f64>>) {
    let xy: Vec<f64> = (0..4).flat_map(|x| [P_XY[0][x], P_XY[1][x]]).collect();
    let xu: Vec<f64> = (0..4).flat_map(|x| [P_XU[0][x], P_XU[1][x]]).collect();
    let yz: Vec<f64> = P_YZ.iter().flatten().copied().collect();
    let cliques = alloc::vec![alloc::vec![X, Y], alloc::vec![X, U], alloc::vec![Y, Z], alloc::vec![U, Z]];
    (cliques, alloc::vec![xy, xu, yz.clone(), yz])
}

/// The single-group Trap joint over `(X, Y, Z, U)`.
pub fn build_trap_joint() -> Result<JointTable> {
    let (cliques, targets) = trap_group_targets();
    let table = ipf_fit(&CARDINALITIES, &cliques, &targets, IPF_TOL, IPF_MAX_ITER)?;
    let names = ["X", "Y", "Z", "U"];
    table.with_variables(names.iter().zip(CARDINALITIES).map(|(n, c)| Variable::with_cardinality(*n, c)).collect())
}

/// `rows` cases over `4 * groups` variables; every group is an independent
/// draw from [`build_trap_joint`].
pub fn trap_dataset(groups: usize, rows: usize, seed: u64) -> Result<Dataset> {
    let variables = trap_variables(groups);
    if rows == 0 {
        return Dataset::empty(variables);
    }
    let joint = build_trap_joint()?;
    let mut cumulative = Vec::with_capacity(joint.probabilities().len());
    let mut acc = 0.0;
    for p in joint.probabilities() {
        acc += p;
        cumulative.push(acc);
    }
    let last = cumulative.len() - 1;
    let cells: Vec<Vec<usize>> = (0..cumulative.len()).map(|c| joint.decode(c)).collect();
    let mut rng = seeded(seed);
    let mut columns: Vec<Vec<u16>> = (0..variables.len()).map(|_| Vec::with_capacity(rows)).collect();
    for _ in 0..rows {
        for g in 0..groups {
            let u = unit(&mut rng);
            let cell = cumulative.partition_point(|&c| c <= u).min(last);
            for (v, &s) in cells[cell].iter().enumerate() {
                columns[g * GROUP + v].push(s as u16);
            }
        }
    }
    Dataset::from_columns(variables, columns)
}
