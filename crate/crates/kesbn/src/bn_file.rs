//! Parameterised Bayesian networks as JSON.
//!
//! ```json
//! {
//!   "variables": [{"name": "rain", "states": ["no", "yes"]},
//!                 {"name": "wet", "states": ["no", "yes"]}],
//!   "arcs": [[0, 1]],
//!   "cpts": [[[0.8, 0.2]],
//!            [[0.9, 0.1], [0.2, 0.8]]]
//! }
//! ```
//!
//! `cpts[x]` holds one row per parent configuration of `x`. Configurations
//! are numbered in mixed radix over the parents in ascending index order,
//! the lowest-indexed parent being the most significant digit; each row is a
//! distribution over the states of `x`.

use std::fs;
use std::path::Path;

use kesbn_core::{BayesNet, Dag, Variable};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableSpec {
    pub name: String,
    pub states: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BnFile {
    pub variables: Vec<VariableSpec>,
    pub arcs: Vec<[usize; 2]>,
    pub cpts: Vec<Vec<Vec<f64>>>,
}

impl BnFile {
    pub fn from_network(bn: &BayesNet) -> Self {
        let variables =
            bn.variables().iter().map(|v| VariableSpec { name: v.name.clone(), states: v.states.clone() }).collect();
        let arcs = bn.dag().arcs().into_iter().map(|a| [a.tail, a.head]).collect();
        let cpts = (0..bn.variables().len())
            .map(|x| {
                let r = bn.variables()[x].cardinality();
                bn.cpt(x).chunks_exact(r).map(<[f64]>::to_vec).collect()
            })
            .collect();
        Self { variables, arcs, cpts }
    }

    pub fn to_network(&self) -> Result<BayesNet> {
        let n = self.variables.len();
        let variables: Vec<Variable> =
            self.variables.iter().map(|v| Variable::new(v.name.clone(), v.states.clone())).collect();
        let dag = Dag::from_arcs(n, self.arcs.iter().map(|&[t, h]| (t, h)))?;
        let cpts = self.cpts.iter().map(|rows| rows.concat()).collect();
        Ok(BayesNet::new(variables, dag, cpts)?)
    }
}

/// Parses a network; syntax errors carry their line and column.
pub fn parse_bn(text: &str, origin: &str) -> Result<BayesNet> {
    let file: BnFile = serde_json::from_str(text)
        .map_err(|e| Error::parse(origin, e.line() as u64, e.column() as u64, e.to_string()))?;
    file.to_network()
}

pub fn load_bn(path: impl AsRef<Path>) -> Result<BayesNet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_bn(&text, &path.display().to_string())
}

pub fn to_json(bn: &BayesNet) -> String {
    let mut s = serde_json::to_string_pretty(&BnFile::from_network(bn)).expect("finite tables");
    s.push('\n');
    s
}

pub fn save_bn(bn: &BayesNet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_json(bn)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHAIN: &str = r#"{
  "variables": [{"name": "rain", "states": ["no", "yes"]},
                {"name": "wet", "states": ["no", "yes"]}],
  "arcs": [[0, 1]],
  "cpts": [[[0.8, 0.2]], [[0.9, 0.1], [0.2, 0.8]]]
}"#;

    #[test]
    fn parses_documented_example() {
        let bn = parse_bn(CHAIN, "chain").unwrap();
        assert!(bn.dag().has_arc(0, 1));
        assert_eq!(bn.distribution(1, 1), [0.2, 0.8]);
    }

    #[test]
    fn round_trip_is_lossless() {
        let vars = vec![
            Variable::with_cardinality("a", 3),
            Variable::with_cardinality("b", 2),
            Variable::with_cardinality("c", 2),
        ];
        let dag = Dag::from_arcs(3, [(0, 2), (1, 2)]).unwrap();
        let bn = BayesNet::random(vars, dag, 0.01, 9).unwrap();
        let again = parse_bn(&to_json(&bn), "mem").unwrap();
        assert_eq!(again, bn);
        assert_eq!(to_json(&again), to_json(&bn));
    }

    #[test]
    fn syntax_errors_have_locations() {
        let broken = CHAIN.replace("[[0, 1]]", "[[0, 1]");
        match parse_bn(&broken, "broken") {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 5);
                assert!(column > 0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn semantic_errors() {
        let cyclic = CHAIN.replace("[[0, 1]]", "[[0, 1], [1, 0]]");
        assert!(matches!(parse_bn(&cyclic, "x"), Err(Error::Core(_))));
        let bad_sum = CHAIN.replace("[0.8, 0.2]", "[0.8, 0.3]");
        assert!(matches!(parse_bn(&bad_sum, "x"), Err(Error::Core(_))));
        let extra = CHAIN.replace("\"arcs\"", "\"edges\": [], \"arcs\"");
        assert!(matches!(parse_bn(&extra, "x"), Err(Error::Parse { .. })));
    }
}
