//! Order-preserving parallel map over a fixed-size worker pool.

use rayon::prelude::*;

use crate::error::{CliError, CliResult};

/// Worker count for `--jobs`; `None` uses every available core.
pub fn resolve_jobs(jobs: Option<usize>) -> CliResult<usize> {
    match jobs {
        Some(0) => Err(CliError::validation("jobs", "must be at least 1")),
        Some(n) => Ok(n),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Results come back in input order whatever the scheduling. On failure the
/// error of the earliest failing item is returned.
pub fn ordered_map<T, U, E, F>(jobs: usize, items: &[T], f: F) -> Result<Vec<U>, E>
where
    T: Sync,
    U: Send,
    E: Send + From<CliError>,
    F: Fn(&T) -> Result<U, E> + Sync + Send,
{
    if jobs <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Data(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<U, E>> = pool.install(|| items.par_iter().map(&f).collect());
    results.into_iter().collect()
}
