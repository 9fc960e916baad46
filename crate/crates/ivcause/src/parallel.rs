//! Thread-pool wrappers around the sequential core routines.

use ivcause_core::simulate::{check_monte_carlo_args, run_replicate, DgpConfig, ReplicateTable};
use rayon::prelude::*;

/// Environment variable capping worker threads; 0 or unset means automatic.
pub const THREADS_ENV: &str = "IV_THREADS";

pub fn threads_from_env() -> Result<usize, String> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| format!("{THREADS_ENV} must be a non-negative integer, got `{v}`")),
        _ => Ok(0),
    }
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
}

/// Monte Carlo run on `threads` workers (0 = automatic).
///
/// Each replicate draws from its own counter-keyed stream and the table is
/// assembled by replicate index, so the output does not depend on `threads`.
pub fn monte_carlo(cfg: &DgpConfig, n: usize, reps: usize, threads: usize) -> ivcause_core::Result<ReplicateTable> {
    check_monte_carlo_args(cfg, n, reps)?;
    let records = pool(threads).install(|| {
        (0..reps)
            .into_par_iter()
            .map(|r| run_replicate(cfg, n, r))
            .collect::<ivcause_core::Result<Vec<_>>>()
    })?;
    Ok(ReplicateTable { records })
}
