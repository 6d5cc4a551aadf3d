//! File formats, parallel experiment execution and the `kesbn` command-line
//! tool built on [`kesbn_core`].

pub mod bn_file;
pub mod cli;
pub mod dataset_csv;
mod error;
pub mod parallel;
pub mod report;

pub use error::{Error, Result};
pub use kesbn_core as core;
