//! Fan-out of independent replicas over the current rayon pool.
//!
//! Replica `i` always draws from the stream `(master_seed, i)` and results
//! come back indexed by `i`, so the output does not depend on the number of
//! workers or their scheduling.

use rayon::prelude::*;

use crate::model::SeedSpec;

/// Runs `f` once per replica and returns the results in replica order.
pub fn run_replicas<T, F>(master_seed: u64, replicas: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(SeedSpec) -> T + Sync + Send,
{
    (0..replicas)
        .into_par_iter()
        .map(|i| f(SeedSpec::new(master_seed, i)))
        .collect()
}

/// Like [`run_replicas`] but stops at the first error (lowest index wins).
pub fn try_run_replicas<T, E, F>(master_seed: u64, replicas: u64, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(SeedSpec) -> Result<T, E> + Sync + Send,
{
    run_replicas(master_seed, replicas, f).into_iter().collect()
}
