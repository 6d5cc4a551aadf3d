use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::Dataset;
use crate::error::{Error, Result};

/// Dense tallies are used while `q * r` stays below this many cells.
const DENSE_LIMIT: u128 = 1 << 22;

/// Child-state tallies for one observed parent configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigCounts {
    /// Mixed-radix index of the parent configuration.
    pub config: u128,
    pub counts: Vec<u32>,
}

impl ConfigCounts {
    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }
}

/// Sufficient statistics of a family `(child, parents)`.
///
/// Parent configurations are indexed in mixed radix with parents in ascending
/// node order, the lowest-indexed parent being the most significant digit.
/// Only configurations that occur in the data are stored; every other row of
/// the `q × r` table is zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilyCounts {
    child_states: usize,
    parent_configs: u128,
    observed: Vec<ConfigCounts>,
}

impl FamilyCounts {
    /// `r`, the number of child states.
    pub fn child_states(&self) -> usize {
        self.child_states
    }

    /// `q`, the number of parent configurations (observed or not).
    pub fn parent_configs(&self) -> u128 {
        self.parent_configs
    }

    /// Configurations with at least one row, ascending by index.
    pub fn observed(&self) -> &[ConfigCounts] {
        &self.observed
    }

    /// `counts(j, k)`.
    pub fn count(&self, config: u128, state: usize) -> u32 {
        match self.observed.binary_search_by_key(&config, |c| c.config) {
            Ok(i) => self.observed[i].counts[state],
            Err(_) => 0,
        }
    }

    /// `N_j`.
    pub fn config_total(&self, config: u128) -> u64 {
        match self.observed.binary_search_by_key(&config, |c| c.config) {
            Ok(i) => self.observed[i].total(),
            Err(_) => 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.observed.iter().map(ConfigCounts::total).sum()
    }

    /// Full `q × r` table. Returns `None` when `q` does not fit in memory
    /// comfortably.
    pub fn dense(&self) -> Option<Vec<Vec<u32>>> {
        if self.parent_configs > DENSE_LIMIT {
            return None;
        }
        let mut out = vec![vec![0; self.child_states]; self.parent_configs as usize];
        for c in &self.observed {
            out[c.config as usize].clone_from(&c.counts);
        }
        Some(out)
    }
}

/// Tallies `counts(j, k)` for `child` given `parents` (any order, no repeats).
pub fn family_counts(data: &Dataset, child: usize, parents: &[usize]) -> Result<FamilyCounts> {
    let n = data.n_vars();
    if child >= n {
        return Err(Error::Index { index: child, limit: n });
    }
    let mut ps = parents.to_vec();
    ps.sort_unstable();
    for w in ps.windows(2) {
        if w[0] == w[1] {
            return Err(Error::InvalidData("repeated parent".into()));
        }
    }
    for &p in &ps {
        if p >= n {
            return Err(Error::Index { index: p, limit: n });
        }
        if p == child {
            return Err(Error::InvalidData("child listed among its parents".into()));
        }
    }
    let cards = data.cardinalities();
    let r = cards[child];
    let q =
        ps.iter().try_fold(1u128, |acc, &p| acc.checked_mul(cards[p] as u128)).ok_or(Error::TooManyConfigurations)?;
    let child_col = data.column(child);
    let rows = data.n_rows();

    let observed = if q * r as u128 <= DENSE_LIMIT {
        let mut table = vec![0u32; q as usize * r];
        let mut idx = vec![0usize; rows];
        for &p in &ps {
            let card = cards[p];
            for (i, &x) in idx.iter_mut().zip(data.column(p)) {
                *i = *i * card + x as usize;
            }
        }
        for (&j, &k) in idx.iter().zip(child_col) {
            table[j * r + k as usize] += 1;
        }
        table
            .chunks_exact(r)
            .enumerate()
            .filter(|(_, row)| row.iter().any(|&c| c > 0))
            .map(|(j, row)| ConfigCounts { config: j as u128, counts: row.to_vec() })
            .collect()
    } else {
        let mut map: BTreeMap<u128, Vec<u32>> = BTreeMap::new();
        for (row, &c) in child_col.iter().enumerate() {
            let j = ps.iter().fold(0u128, |acc, &p| acc * cards[p] as u128 + data.value(row, p) as u128);
            map.entry(j).or_insert_with(|| vec![0; r])[c as usize] += 1;
        }
        map.into_iter().map(|(config, counts)| ConfigCounts { config, counts }).collect()
    };
    Ok(FamilyCounts { child_states: r, parent_configs: q, observed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Variable;
    use alloc::vec;

    fn xy() -> Dataset {
        let vars = vec![Variable::with_cardinality("x", 2), Variable::with_cardinality("y", 2)];
        Dataset::from_rows(vars, &[vec![0, 0], vec![0, 1], vec![1, 1]]).unwrap()
    }

    #[test]
    fn tallies() {
        let d = xy();
        assert_eq!(family_counts(&d, 1, &[0]).unwrap().dense().unwrap(), vec![vec![1, 1], vec![0, 1]]);
        assert_eq!(family_counts(&d, 1, &[]).unwrap().dense().unwrap(), vec![vec![1, 2]]);
        assert_eq!(family_counts(&d, 0, &[1]).unwrap().dense().unwrap(), vec![vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn errors() {
        let d = xy();
        assert!(matches!(family_counts(&d, 2, &[]), Err(Error::Index { .. })));
        assert!(matches!(family_counts(&d, 0, &[5]), Err(Error::Index { .. })));
        assert!(matches!(family_counts(&d, 0, &[0]), Err(Error::InvalidData(_))));
    }

    #[test]
    fn mixed_radix_puts_lowest_parent_first() {
        // parents 0 (card 2) and 1 (card 3): config = x0 * 3 + x1
        let vars = vec![
            Variable::with_cardinality("a", 2),
            Variable::with_cardinality("b", 3),
            Variable::with_cardinality("c", 2),
        ];
        let d = Dataset::from_rows(vars, &[vec![1, 2, 1], vec![0, 1, 0]]).unwrap();
        let fc = family_counts(&d, 2, &[1, 0]).unwrap();
        assert_eq!(fc.parent_configs(), 6);
        assert_eq!(fc.count(5, 1), 1);
        assert_eq!(fc.count(1, 0), 1);
        assert_eq!(fc.config_total(3), 0);
    }

    #[test]
    fn sparse_path_matches_dense() {
        // 12 parents with 8 states: q = 8^12 = 2^36, beyond the dense limit.
        let n = 13;
        let vars: Vec<Variable> = (0..n).map(|i| Variable::with_cardinality(alloc::format!("v{i}"), 8)).collect();
        let rows: Vec<Vec<u16>> =
            (0..50u16).map(|r| (0..n as u16).map(|c| (r * 7 + c * 3 + r / 5) % 8).collect()).collect();
        let d = Dataset::from_rows(vars, &rows).unwrap();
        let parents: Vec<usize> = (1..n).collect();
        let fc = family_counts(&d, 0, &parents).unwrap();
        assert_eq!(fc.total(), 50);
        assert!(fc.dense().is_none());
        for (r, row) in rows.iter().enumerate() {
            let j = parents.iter().fold(0u128, |acc, &p| acc * 8 + row[p] as u128);
            assert!(fc.count(j, row[0] as usize) >= 1, "row {r}");
        }
    }
}
