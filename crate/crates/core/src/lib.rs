#![no_std]
// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

//! Average-treatment-effect estimation for a continuous treatment under
//! unmeasured confounding.
//!
//! The crate is `no_std` (it needs `alloc`). It provides:
//!
//! * [`dataset`]: an immutable columnar table with validation and z-scoring,
//! * [`stats`]: Pearson and first-order partial correlation, Fisher-z intervals,
//! * [`estimators`]: OLS, covariate-adjusted OLS, just-identified IV, two-stage
//!   least squares and the binary-treatment g-formula,
//! * [`simulate`]: a counter-seeded data-generating process and Monte Carlo driver,
//! * [`ivsearch`]: correlation-threshold screening of instrument/confounder pairs.
//!
//! File formats, parallel execution and the command line live in the `ivcause`
//! crate.

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dataset;
pub mod error;
pub mod estimators;
pub mod ivsearch;
pub mod linalg;
pub mod rng;
pub mod simulate;
pub mod stats;

pub use dataset::{Dataset, StandardizationRecord};
pub use error::{Error, Result};
pub use estimators::{AteEstimate, FitOptions, Method};
pub use ivsearch::{IvCandidate, SearchCriteria};
pub use simulate::{DgpConfig, ReplicateTable};
pub use stats::CorrelationReport;
