//! Structure learning for categorical Bayesian networks with the k-greedy
//! equivalence search family.
//!
//! `k = 0` gives the fully stochastic variant (SES), `k = 1` the fully greedy
//! one (GES). Models are represented by DAGs; neighbours in the inclusion
//! boundary are sampled by random covered-arc reversals followed by a single
//! arc addition or removal.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, threads and the
//! command-line front end live in the `kesbn` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod bits;
pub mod cache;
pub mod data;
mod error;
pub mod graph;
pub mod oracle;
pub mod rng;
pub mod score;
pub mod search;

pub use cache::ScoreCache;
pub use data::{BayesNet, Dataset, FamilyCounts, JointTable, Variable};
pub use error::{Error, Result};
pub use graph::{Arc, Dag, Fingerprint};
pub use score::ScoreKind;
pub use search::{ExperimentSummary, KRecord, RunResult, SearchConfig};
