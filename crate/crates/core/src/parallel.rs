//! Worker-count control for the data-parallel sweeps.

use crate::error::{Error, Result};

/// Runs `f` on a dedicated pool of `workers` threads, or on the global pool
/// when `workers == 0`.
pub fn run<R, F>(workers: usize, f: F) -> Result<R>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}
