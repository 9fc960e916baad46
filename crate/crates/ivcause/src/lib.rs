//! File formats, parallel execution and the `ivcause` command line on top of
//! [`ivcause_core`].

pub mod cli;
pub mod io;
pub mod parallel;
pub mod report;
pub mod svg;

pub use ivcause_core as core;
