//! Row-partitioned execution for per-cell raster kernels.
//!
//! Kernels write each output row from immutable inputs only, so the result
//! does not depend on how rows are split across workers.

use std::sync::Arc;

use rayon::prelude::*;
use rayon::ThreadPool;

#[derive(Clone)]
pub struct Executor {
    workers: usize,
    pool: Option<Arc<ThreadPool>>,
}

impl std::fmt::Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Executor").field("workers", &self.workers).finish()
    }
}

impl Executor {
    /// Runs everything on the calling thread.
    pub fn sequential() -> Self {
        Executor { workers: 1, pool: None }
    }

    /// A dedicated pool with `workers` threads. `0` means one per available core.
    pub fn with_workers(workers: usize) -> Self {
        let workers = if workers == 0 {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        } else {
            workers
        };
        if workers == 1 {
            return Self::sequential();
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map(Arc::new)
            .ok();
        Executor { workers, pool }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Calls `f(row, row_slice)` for every row of a row-major buffer.
    pub fn for_each_row<F>(&self, out: &mut [f64], ncols: usize, f: F)
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        if ncols == 0 {
            return;
        }
        match &self.pool {
            Some(pool) => pool.install(|| {
                out.par_chunks_mut(ncols)
                    .enumerate()
                    .for_each(|(row, slice)| f(row, slice));
            }),
            None => out
                .chunks_mut(ncols)
                .enumerate()
                .for_each(|(row, slice)| f(row, slice)),
        }
    }

    /// Order-preserving parallel map.
    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match &self.pool {
            Some(pool) => pool.install(|| items.par_iter().map(&f).collect()),
            None => items.iter().map(f).collect(),
        }
    }
}

impl Default for Executor {
    fn default() -> Self {
        Self::with_workers(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_results_do_not_depend_on_worker_count() {
        let ncols = 37;
        let kernel = |row: usize, out: &mut [f64]| {
            for (col, v) in out.iter_mut().enumerate() {
                *v = ((row * 31 + col) as f64).sqrt().sin();
            }
        };
        let mut a = vec![0.0; ncols * 101];
        let mut b = a.clone();
        Executor::sequential().for_each_row(&mut a, ncols, kernel);
        Executor::with_workers(3).for_each_row(&mut b, ncols, kernel);
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn map_keeps_order() {
        let items: Vec<u32> = (0..100).collect();
        let out = Executor::with_workers(4).map(&items, |v| v * 2);
        assert_eq!(out, items.iter().map(|v| v * 2).collect::<Vec<_>>());
    }
}
