use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Largest supported number of states per variable.
pub const MAX_CARDINALITY: usize = u16::MAX as usize + 1;

/// A categorical variable: a name and its state labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Variable {
    pub name: String,
    pub states: Vec<String>,
}

impl Variable {
    pub fn new(name: impl Into<String>, states: Vec<String>) -> Self {
        Self { name: name.into(), states }
    }

    /// Variable whose states are labelled `"0"`, `"1"`, ...
    pub fn with_cardinality(name: impl Into<String>, cardinality: usize) -> Self {
        Self { name: name.into(), states: (0..cardinality).map(|s| s.to_string()).collect() }
    }

    #[inline]
    pub fn cardinality(&self) -> usize {
        self.states.len()
    }
}

/// Complete categorical data, stored column-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    variables: Vec<Variable>,
    columns: Vec<Vec<u16>>,
    rows: usize,
}

fn check_variables(variables: &[Variable]) -> Result<()> {
    for v in variables {
        if v.cardinality() < 2 {
            return Err(Error::SingleState(v.name.clone()));
        }
        if v.cardinality() > MAX_CARDINALITY {
            return Err(Error::InvalidData(format!("variable {} has too many states", v.name)));
        }
    }
    Ok(())
}

impl Dataset {
    /// Dataset with no rows.
    pub fn empty(variables: Vec<Variable>) -> Result<Self> {
        check_variables(&variables)?;
        let columns = variables.iter().map(|_| Vec::new()).collect();
        Ok(Self { variables, columns, rows: 0 })
    }

    pub fn from_columns(variables: Vec<Variable>, columns: Vec<Vec<u16>>) -> Result<Self> {
        check_variables(&variables)?;
        if columns.len() != variables.len() {
            return Err(Error::SizeMismatch { expected: variables.len(), found: columns.len() });
        }
        let rows = columns.first().map_or(0, Vec::len);
        for (v, col) in variables.iter().zip(&columns) {
            if col.len() != rows {
                return Err(Error::SizeMismatch { expected: rows, found: col.len() });
            }
            if let Some(&bad) = col.iter().find(|&&x| x as usize >= v.cardinality()) {
                return Err(Error::InvalidData(format!(
                    "value {bad} out of range for variable {} with {} states",
                    v.name,
                    v.cardinality()
                )));
            }
        }
        Ok(Self { variables, columns, rows })
    }

    pub fn from_rows(variables: Vec<Variable>, rows: &[Vec<u16>]) -> Result<Self> {
        let n = variables.len();
        let mut columns: Vec<Vec<u16>> = (0..n).map(|_| Vec::with_capacity(rows.len())).collect();
        for row in rows {
            if row.len() != n {
                return Err(Error::SizeMismatch { expected: n, found: row.len() });
            }
            for (c, &x) in columns.iter_mut().zip(row) {
                c.push(x);
            }
        }
        if rows.is_empty() {
            return Self::empty(variables);
        }
        Self::from_columns(variables, columns)
    }

    #[inline]
    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.variables.iter().map(Variable::cardinality).collect()
    }

    #[inline]
    pub fn column(&self, var: usize) -> &[u16] {
        &self.columns[var]
    }

    #[inline]
    pub fn value(&self, row: usize, var: usize) -> u16 {
        self.columns[var][row]
    }

    pub fn row(&self, row: usize) -> Vec<u16> {
        self.columns.iter().map(|c| c[row]).collect()
    }

    /// Projection onto `vars`, in the given order.
    pub fn select(&self, vars: &[usize]) -> Result<Self> {
        for &v in vars {
            if v >= self.n_vars() {
                return Err(Error::Index { index: v, limit: self.n_vars() });
            }
        }
        Ok(Self {
            variables: vars.iter().map(|&v| self.variables[v].clone()).collect(),
            columns: vars.iter().map(|&v| self.columns[v].clone()).collect(),
            rows: self.rows,
        })
    }

    /// 64-bit FNV-1a digest over names, state labels and values.
    pub fn digest(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(PRIME);
            }
        };
        eat(&(self.n_vars() as u64).to_le_bytes());
        eat(&(self.rows as u64).to_le_bytes());
        for v in &self.variables {
            eat(v.name.as_bytes());
            eat(&[0]);
            for s in &v.states {
                eat(s.as_bytes());
                eat(&[0]);
            }
        }
        for c in &self.columns {
            for &x in c {
                eat(&x.to_le_bytes());
            }
        }
        h
    }
}
