//! Plumbing shared by both game solvers: options, node budget, and the
//! bound-carrying transposition table entries.

use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

pub(crate) const INF: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    /// Alpha-beta cutoffs. Values are identical either way.
    pub prune: bool,
    /// Root moves are evaluated on this many worker threads when > 1.
    pub threads: usize,
    /// Abort once this many positions have been expanded.
    pub max_states: Option<u64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { prune: true, threads: 1, max_states: None }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("state budget of {limit} expanded positions exhausted")]
    ResourceLimit { limit: u64 },
    #[error("could not start worker pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Default)]
pub(crate) struct Budget {
    expanded: AtomicU64,
    limit: Option<u64>,
}

impl Budget {
    pub(crate) fn new(limit: Option<u64>) -> Self {
        Self { expanded: AtomicU64::new(0), limit }
    }

    pub(crate) fn charge(&self) -> Result<(), SolveError> {
        let n = self.expanded.fetch_add(1, Ordering::Relaxed) + 1;
        match self.limit {
            Some(limit) if n > limit => Err(SolveError::ResourceLimit { limit }),
            _ => Ok(()),
        }
    }

    pub(crate) fn expanded(&self) -> u64 {
        self.expanded.load(Ordering::Relaxed)
    }
}

/// What is known about a position's exact value: `lo <= value <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Bounds {
    pub lo: u32,
    pub hi: u32,
}

impl Bounds {
    pub(crate) fn exact(&self) -> Option<u32> {
        (self.lo == self.hi).then_some(self.lo)
    }

    /// Folds the result of a fail-soft search of window `(alpha, beta)` into
    /// the bounds.
    pub(crate) fn record(&mut self, value: u32, alpha: u32, beta: u32) {
        if value <= alpha {
            self.hi = self.hi.min(value);
        } else if value >= beta {
            self.lo = self.lo.max(value);
        } else {
            self.lo = value;
            self.hi = value;
        }
    }
}

pub(crate) fn run_parallel<T, F>(threads: usize, f: F) -> Result<T, SolveError>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| SolveError::ThreadPool(e.to_string()))?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_trips_after_limit() {
        let b = Budget::new(Some(2));
        assert!(b.charge().is_ok());
        assert!(b.charge().is_ok());
        assert_eq!(b.charge(), Err(SolveError::ResourceLimit { limit: 2 }));
        assert_eq!(b.expanded(), 3);
    }

    #[test]
    fn bounds_record() {
        let mut b = Bounds { lo: 3, hi: INF };
        b.record(5, 4, 8);
        assert_eq!(b.exact(), Some(5));
        let mut b = Bounds { lo: 3, hi: INF };
        b.record(4, 4, 8);
        assert_eq!(b, Bounds { lo: 3, hi: 4 });
        b.record(4, 0, 4);
        assert_eq!(b.exact(), Some(4));
    }
}
