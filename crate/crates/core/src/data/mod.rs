//! Categorical data: datasets, sufficient statistics, parameterised networks,
//! explicit joint tables and the synthetic Trap generators.

mod bayesnet;
mod counts;
mod dataset;
mod joint;
pub mod trap;

pub use bayesnet::{forward_sample, BayesNet};
pub use counts::{family_counts, ConfigCounts, FamilyCounts};
pub use dataset::{Dataset, Variable, MAX_CARDINALITY};
pub use joint::{ipf_fit, sample_joint, JointTable, IPF_MAX_ITER, IPF_TOL};
pub use trap::{build_trap_joint, trap_dataset};

use crate::rng::unit;
use rand::Rng;

/// Draws a state from a discrete distribution by inversion. Falls back to the
/// last state with positive mass when rounding leaves `u` past the total.
pub(crate) fn draw_categorical<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let u = unit(rng);
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}
