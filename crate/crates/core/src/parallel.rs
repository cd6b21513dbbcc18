use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::error::{Error, Result};

/// Dedicated pool with `workers` threads (0 means one per core).
pub fn pool(workers: usize) -> Result<ThreadPool> {
    ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}
