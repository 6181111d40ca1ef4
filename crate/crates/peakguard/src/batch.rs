//! Order-preserving parallel map over system indices.

use rayon::prelude::*;

use crate::CliError;

/// Runs `f(0), …, f(n − 1)` on a pool of `jobs` threads (all cores when
/// `None`) and returns the results in index order. Each call must derive its
/// randomness from the index, so the output does not depend on scheduling.
pub fn run_indexed<T, F>(n: usize, jobs: Option<usize>, f: F) -> Result<Vec<T>, CliError>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder.build().map_err(|e| CliError::Failed(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..n as u64).into_par_iter().map(&f).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_index_order_for_any_pool_size() {
        let serial: Vec<u64> = (0..200).map(|i| i * i).collect();
        for jobs in [Some(1), Some(3), None] {
            assert_eq!(run_indexed(200, jobs, |i| i * i).unwrap(), serial);
        }
        assert!(run_indexed(1, Some(0), |i| i).is_err());
    }
}
