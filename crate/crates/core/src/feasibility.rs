//! Exact "does this multiset fit into `m` bins of capacity `C`" oracle, a
//! witness-producing variant, and the packing repair used to show that
//! incremented items still fit into slightly larger bins.

use std::collections::HashSet;

use dashmap::DashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::ItemMultiset;

/// Assignment of items to bins. `bins[i]` lists the sizes packed in bin `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Packing {
    pub bins: Vec<Vec<u32>>,
}

impl Packing {
    pub fn loads(&self) -> Vec<u64> {
        self.bins
            .iter()
            .map(|b| b.iter().map(|&s| s as u64).sum())
            .collect()
    }

    pub fn items(&self) -> ItemMultiset {
        let mut ms = ItemMultiset::new();
        for &s in self.bins.iter().flatten() {
            ms.insert(s);
        }
        ms
    }

    pub fn item_count(&self) -> usize {
        self.bins.iter().map(Vec::len).sum()
    }
}

/// Exact feasibility: true iff every item can be assigned to one of `m`
/// bins with no bin exceeding `capacity`.
pub fn fits(items: &ItemMultiset, m: u32, capacity: u32) -> bool {
    PackingSearch::new(items, m, capacity)
        .map(|mut s| s.run().is_some())
        .unwrap_or(false)
}

/// Returns a witness packing iff [`fits`] is true.
pub fn find_packing(items: &ItemMultiset, m: u32, capacity: u32) -> Option<Packing> {
    let mut search = PackingSearch::new(items, m, capacity)?;
    let assignment = search.run()?;
    let mut bins = vec![Vec::new(); m as usize];
    for (&size, &bin) in search.items.iter().zip(&assignment) {
        bins[bin].push(size);
    }
    // zero-size items never constrain anything; park them in the first bin
    for _ in 0..items.count(0) {
        bins[0].push(0);
    }
    Some(Packing { bins })
}

/// Depth-first bin assignment over items in non-increasing order, memoizing
/// failed `(item index, sorted residual capacities)` pairs.
struct PackingSearch {
    items: Vec<u32>,
    residual: Vec<u32>,
    failed: HashSet<(usize, Vec<u32>)>,
}

impl PackingSearch {
    /// `None` when the instance is trivially infeasible.
    fn new(items: &ItemMultiset, m: u32, capacity: u32) -> Option<Self> {
        if m == 0 {
            return if items.is_empty() { Some(Self::empty()) } else { None };
        }
        let sizes: Vec<u32> = items.sizes_desc().into_iter().filter(|&s| s > 0).collect();
        if sizes.first().is_some_and(|&s| s > capacity) {
            return None;
        }
        if items.total_mass() > m as u64 * capacity as u64 {
            return None;
        }
        // items larger than half the capacity pairwise exclude each other
        if sizes.iter().filter(|&&s| 2 * s > capacity).count() > m as usize {
            return None;
        }
        Some(Self {
            items: sizes,
            residual: vec![capacity; m as usize],
            failed: HashSet::new(),
        })
    }

    fn empty() -> Self {
        Self { items: Vec::new(), residual: Vec::new(), failed: HashSet::new() }
    }

    fn run(&mut self) -> Option<Vec<usize>> {
        let mut assignment = Vec::with_capacity(self.items.len());
        if self.descend(0, &mut assignment) {
            Some(assignment)
        } else {
            None
        }
    }

    fn descend(&mut self, idx: usize, assignment: &mut Vec<usize>) -> bool {
        if idx == self.items.len() {
            return true;
        }
        let mut key_res = self.residual.clone();
        key_res.sort_unstable();
        let key = (idx, key_res);
        if self.failed.contains(&key) {
            return false;
        }
        let item = self.items[idx];
        let mut tried: Vec<u32> = Vec::with_capacity(self.residual.len());
        for b in 0..self.residual.len() {
            let r = self.residual[b];
            if r < item || tried.contains(&r) {
                continue;
            }
            tried.push(r);
            self.residual[b] -= item;
            assignment.push(b);
            if self.descend(idx + 1, assignment) {
                return true;
            }
            assignment.pop();
            self.residual[b] += item;
        }
        self.failed.insert(key);
        false
    }
}

/// Memoized [`fits`] for a fixed `(m, capacity)`, shared across one solve.
#[derive(Debug)]
pub struct FeasibilityCache {
    m: u32,
    capacity: u32,
    known: DashMap<ItemMultiset, bool>,
}

impl FeasibilityCache {
    pub fn new(m: u32, capacity: u32) -> Self {
        Self { m, capacity, known: DashMap::new() }
    }

    pub fn fits(&self, items: &ItemMultiset) -> bool {
        if let Some(v) = self.known.get(items) {
            return *v;
        }
        let v = fits(items, self.m, self.capacity);
        self.known.insert(items.clone(), v);
        v
    }

    pub fn len(&self) -> usize {
        self.known.len()
    }

    pub fn is_empty(&self) -> bool {
        self.known.is_empty()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RepackError {
    #[error("h must be positive")]
    ZeroHeight,
    #[error("packing has {found} bins, expected {expected}")]
    BinCount { expected: u32, found: usize },
    #[error("bin {bin} has load {load} > h = {h}: items must fit into bins of size h")]
    Overfull { bin: usize, load: u64, h: u32 },
    #[error("item count plus total size is {lhs}, which must be < m*h = {rhs}")]
    TooMuchMass { lhs: u64, rhs: u64 },
    #[error("repair got stuck: no movable item or no safe bin")]
    Stuck,
}

/// One repair move: an item of `size` moved from critical bin `from` to
/// safe bin `to`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairMove {
    pub from: usize,
    pub to: usize,
    pub size: u32,
    pub critical_items_before: usize,
    pub critical_items_after: usize,
}

/// `load > h + sqrt(h)`, exact.
pub fn is_critical(load: u64, h: u32) -> bool {
    let h = h as u64;
    load > h && (load - h) * (load - h) > h
}

/// `size <= sqrt(h) + 1`, exact.
pub fn is_movable(size: u32, h: u32) -> bool {
    size <= 1 || ((size - 1) as u64).pow(2) <= h as u64
}

/// `load <= h + sqrt(h)`, exact.
pub fn within_stretched(load: u64, h: u32) -> bool {
    !is_critical(load, h)
}

/// Increments every item of a packing into `m` bins of size `h` and repairs
/// the result into `m` bins of size `h + sqrt(h)`.
///
/// Requires every bin load `<= h` and `n + sum(sizes) < m*h`. Among the
/// movable items of the lowest-index critical bin the smallest is moved to
/// the lowest-index safe bin (load `< h`), until no bin is critical.
pub fn repack_incremented(packing: &Packing, h: u32, m: u32) -> Result<Packing, RepackError> {
    repack_incremented_traced(packing, h, m).map(|(p, _)| p)
}

/// [`repack_incremented`] that also returns the repair moves in order.
pub fn repack_incremented_traced(
    packing: &Packing,
    h: u32,
    m: u32,
) -> Result<(Packing, Vec<RepairMove>), RepackError> {
    if h == 0 {
        return Err(RepackError::ZeroHeight);
    }
    if packing.bins.len() != m as usize {
        return Err(RepackError::BinCount { expected: m, found: packing.bins.len() });
    }
    for (bin, load) in packing.loads().into_iter().enumerate() {
        if load > h as u64 {
            return Err(RepackError::Overfull { bin, load, h });
        }
    }
    let lhs = packing.item_count() as u64 + packing.loads().iter().sum::<u64>();
    let rhs = m as u64 * h as u64;
    if lhs >= rhs {
        return Err(RepackError::TooMuchMass { lhs, rhs });
    }

    let mut bins: Vec<Vec<u32>> = packing
        .bins
        .iter()
        .map(|b| b.iter().map(|&s| s + 1).collect())
        .collect();
    let load = |b: &Vec<u32>| b.iter().map(|&s| s as u64).sum::<u64>();
    let critical_items = |bins: &[Vec<u32>]| {
        bins.iter().filter(|b| is_critical(load(b), h)).map(Vec::len).sum::<usize>()
    };

    let mut moves = Vec::new();
    // each move takes one item out of a critical bin for good
    let max_moves = packing.item_count();
    while let Some(from) = bins.iter().position(|b| is_critical(load(b), h)) {
        if moves.len() >= max_moves {
            return Err(RepackError::Stuck);
        }
        let before = critical_items(&bins);
        let (pos, size) = bins[from]
            .iter()
            .enumerate()
            .filter(|(_, &s)| is_movable(s, h))
            .min_by_key(|(i, &s)| (s, *i))
            .map(|(i, &s)| (i, s))
            .ok_or(RepackError::Stuck)?;
        let to = bins.iter().position(|b| load(b) < h as u64).ok_or(RepackError::Stuck)?;
        bins[from].remove(pos);
        bins[to].push(size);
        moves.push(RepairMove {
            from,
            to,
            size,
            critical_items_before: before,
            critical_items_after: critical_items(&bins),
        });
    }
    Ok((Packing { bins }, moves))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(v: &[u32]) -> ItemMultiset {
        ItemMultiset::from_sizes(v)
    }

    #[test]
    fn fits_examples() {
        assert!(fits(&ms(&[1, 1, 1]), 2, 3));
        assert!(!fits(&ms(&[2, 2, 2]), 2, 3));
        assert!(fits(&ms(&[3, 2, 2, 1, 1]), 2, 5));
        assert!(fits(&ms(&[]), 1, 0));
        assert!(fits(&ms(&[0, 0, 0]), 2, 0));
        assert!(!fits(&ms(&[4]), 3, 3));
    }

    #[test]
    fn find_packing_examples() {
        let p = find_packing(&ms(&[1, 1, 1]), 2, 3).unwrap();
        assert!(p.loads().iter().all(|&l| l <= 3));
        assert_eq!(p.items(), ms(&[1, 1, 1]));

        assert!(find_packing(&ms(&[2, 2, 2]), 2, 3).is_none());

        let p = find_packing(&ms(&[3, 2, 2, 1, 1]), 2, 5).unwrap();
        let mut loads = p.loads();
        loads.sort();
        assert_eq!(loads, vec![4, 5]);
        assert_eq!(p.items(), ms(&[3, 2, 2, 1, 1]));
    }

    #[test]
    fn cache_agrees_with_direct_call() {
        let cache = FeasibilityCache::new(2, 3);
        for items in [ms(&[2, 2, 1]), ms(&[2, 2, 2]), ms(&[2, 2, 1])] {
            assert_eq!(cache.fits(&items), fits(&items, 2, 3));
        }
        assert_eq!(cache.len(), 2);
    }

    #[test]
    fn repack_without_critical_bins() {
        let p = Packing { bins: vec![vec![1, 1], vec![1]] };
        let out = repack_incremented(&p, 4, 2).unwrap();
        assert_eq!(out.bins, vec![vec![2, 2], vec![2]]);
        assert_eq!(out.loads(), vec![4, 2]);
    }

    #[test]
    fn repack_moves_one_item() {
        let p = Packing { bins: vec![vec![2, 1, 1], vec![]] };
        let (out, moves) = repack_incremented_traced(&p, 4, 2).unwrap();
        assert_eq!(moves.len(), 1);
        assert_eq!(moves[0].from, 0);
        assert_eq!(moves[0].to, 1);
        assert_eq!(moves[0].size, 2);
        assert_eq!(out.loads(), vec![5, 2]);
        assert_eq!(out.items(), ms(&[3, 2, 2]));
    }

    #[test]
    fn repack_precondition_errors() {
        let p = Packing { bins: vec![vec![4], vec![4]] };
        assert_eq!(
            repack_incremented(&p, 4, 2),
            Err(RepackError::TooMuchMass { lhs: 10, rhs: 8 })
        );
        let p = Packing { bins: vec![vec![5], vec![]] };
        assert!(matches!(repack_incremented(&p, 4, 2), Err(RepackError::Overfull { bin: 0, .. })));
        let p = Packing { bins: vec![vec![1]] };
        assert!(matches!(repack_incremented(&p, 4, 2), Err(RepackError::BinCount { .. })));
    }

    #[test]
    fn sqrt_thresholds_are_exact() {
        // h = 4: h + sqrt(h) = 6
        assert!(!is_critical(6, 4));
        assert!(is_critical(7, 4));
        assert!(is_movable(3, 4));
        assert!(!is_movable(4, 4));
        // h = 5: sqrt(5) ~ 2.236, so 7 <= 7.236 and 8 > 7.236
        assert!(!is_critical(7, 5));
        assert!(is_critical(8, 5));
        assert!(is_movable(3, 5));
        assert!(!is_movable(4, 5));
    }
}
