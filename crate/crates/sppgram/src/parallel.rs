//! Thread-pool executor for period scans and simulation studies.

use rayon::prelude::*;
use sppgram_core::Executor;

/// Environment variable giving the default worker count.
pub const THREADS_ENV: &str = "SPPGRAM_THREADS";

/// Runs work items on a dedicated rayon pool. Results come back in index
/// order, so output does not depend on the number of threads.
pub struct Pool {
    pool: rayon::ThreadPool,
}

impl Pool {
    /// `None` uses `SPPGRAM_THREADS` if set, else one worker per core.
    pub fn new(threads: Option<usize>) -> Result<Self, rayon::ThreadPoolBuildError> {
        let threads = threads.or_else(|| std::env::var(THREADS_ENV).ok()?.parse().ok()).unwrap_or(0);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Pool {
    fn map_indexed<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..len).into_par_iter().map(f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sppgram_core::Sequential;

    #[test]
    fn order_matches_sequential() {
        let pool = Pool::new(Some(3)).unwrap();
        assert_eq!(pool.threads(), 3);
        let f = |i: usize| (i * 7919) % 101;
        assert_eq!(pool.map_indexed(500, f), Sequential.map_indexed(500, f));
    }
}
