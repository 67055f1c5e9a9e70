//! Index-ordered parallel evaluation of independent tasks.
//!
//! Results are always assembled by task index, so the output does not depend
//! on the number of workers or on completion order.

use std::fmt::Display;
use std::num::NonZeroUsize;
use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;
use thiserror::Error;

/// Number of worker threads for a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Workers(NonZeroUsize);

impl Workers {
    pub const ONE: Workers = Workers(NonZeroUsize::MIN);

    pub fn new(n: usize) -> Option<Self> {
        NonZeroUsize::new(n).map(Self)
    }

    /// One worker per available CPU.
    pub fn available() -> Self {
        Self(std::thread::available_parallelism().unwrap_or(NonZeroUsize::MIN))
    }

    pub fn get(self) -> usize {
        self.0.get()
    }
}

impl Default for Workers {
    fn default() -> Self {
        Self::available()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParallelError {
    #[error("task {index} failed: {message}")]
    Task { index: usize, message: String },
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

impl ParallelError {
    /// Index of the failing task, if a task failed.
    pub fn index(&self) -> Option<usize> {
        match self {
            ParallelError::Task { index, .. } => Some(*index),
            ParallelError::Pool(_) => None,
        }
    }
}

fn run_one<T, E, F>(f: &F, index: usize) -> Result<T, ParallelError>
where
    E: Display,
    F: Fn(usize) -> Result<T, E>,
{
    match catch_unwind(AssertUnwindSafe(|| f(index))) {
        Ok(Ok(v)) => Ok(v),
        Ok(Err(e)) => Err(ParallelError::Task {
            index,
            message: e.to_string(),
        }),
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "worker panicked".to_string());
            Err(ParallelError::Task { index, message })
        }
    }
}

/// Evaluates `f(0), …, f(len − 1)` on up to `workers` threads.
///
/// On failure the error names the lowest failing index.
pub fn parallel_map<T, E, F>(len: usize, workers: Workers, f: F) -> Result<Vec<T>, ParallelError>
where
    T: Send,
    E: Display,
    F: Fn(usize) -> Result<T, E> + Sync,
{
    if workers.get() == 1 || len <= 1 {
        return (0..len).map(|i| run_one(&f, i)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.get())
        .build()
        .map_err(|e| ParallelError::Pool(e.to_string()))?;
    let results: Vec<Result<T, ParallelError>> =
        pool.install(|| (0..len).into_par_iter().map(|i| run_one(&f, i)).collect());
    results.into_iter().collect()
}
