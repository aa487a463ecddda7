//! Online placement policies for the integer-size game: a function from the
//! items seen so far (the last one being the item to place) to a bin index.

use thiserror::Error;

use crate::feasibility::fits;
use crate::types::ItemMultiset;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolicyError {
    #[error("item sequence {items:?} does not fit into {m} bins of size {capacity}")]
    IllegalSequence { items: Vec<u32>, m: u32, capacity: u32 },
    #[error("empty item sequence")]
    Empty,
    #[error(transparent)]
    Solve(#[from] crate::search::SolveError),
}

pub trait OnlinePolicy {
    fn bins(&self) -> u32;

    /// Offline bin size the policy assumes its inputs respect.
    fn capacity(&self) -> u32;

    /// Bin (fixed physical index) for the last item of `items`.
    fn place(&self, items: &[u32]) -> Result<usize, PolicyError>;
}

pub(crate) fn check_sequence(items: &[u32], m: u32, capacity: u32) -> Result<(), PolicyError> {
    if items.is_empty() {
        return Err(PolicyError::Empty);
    }
    if !fits(&ItemMultiset::from_sizes(items), m, capacity) {
        return Err(PolicyError::IllegalSequence { items: items.to_vec(), m, capacity });
    }
    Ok(())
}

/// Greedy list scheduling: least loaded bin, lowest index on ties.
#[derive(Debug, Clone, Copy)]
pub struct LeastLoaded {
    pub m: u32,
    pub capacity: u32,
}

impl OnlinePolicy for LeastLoaded {
    fn bins(&self) -> u32 {
        self.m
    }

    fn capacity(&self) -> u32 {
        self.capacity
    }

    fn place(&self, items: &[u32]) -> Result<usize, PolicyError> {
        check_sequence(items, self.m, self.capacity)?;
        let mut loads = vec![0u64; self.m as usize];
        let mut last = 0;
        for &y in items {
            last = (0..loads.len()).min_by_key(|&i| (loads[i], i)).unwrap_or(0);
            loads[last] += y as u64;
        }
        Ok(last)
    }
}

/// Puts everything in bin 0.
#[derive(Debug, Clone, Copy)]
pub struct FirstBin {
    pub m: u32,
    pub capacity: u32,
}

impl OnlinePolicy for FirstBin {
    fn bins(&self) -> u32 {
        self.m
    }

    fn capacity(&self) -> u32 {
        self.capacity
    }

    fn place(&self, items: &[u32]) -> Result<usize, PolicyError> {
        check_sequence(items, self.m, self.capacity)?;
        Ok(0)
    }
}
