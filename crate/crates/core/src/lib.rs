//! Exact and statistical tools for counting solutions of linear systems
//! `Ax = b` in random subsets of `{1, .., n}`.

pub mod census;
pub mod compounded;
pub mod diagnostics;
pub mod error;
pub mod exact_linalg;
pub mod feasibility;
pub mod partition;
pub mod random_model;
pub mod serde_util;
pub mod system_properties;

pub use error::{Error, Result};
pub use exact_linalg::{ColSet, IntMatrix, RationalVector};
pub use partition::{Partition, PartitionFamily};
pub use system_properties::SystemSpec;
