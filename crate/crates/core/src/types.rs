//! Domain types shared by both games: instance parameters, exact scores,
//! canonical load vectors and item multisets.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("bin count m must be at least 1")]
    ZeroBins,
    #[error("granularity g must be at least 1")]
    ZeroGranularity,
}

/// Instance parameters: `m` bins, item sizes scaled to integers over `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Config {
    m: u32,
    g: u32,
}

impl Config {
    pub fn new(m: u32, g: u32) -> Result<Self, ConfigError> {
        if m == 0 {
            return Err(ConfigError::ZeroBins);
        }
        if g == 0 {
            return Err(ConfigError::ZeroGranularity);
        }
        Ok(Self { m, g })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn g(&self) -> u32 {
        self.g
    }

    pub fn bins(&self) -> usize {
        self.m as usize
    }

    /// Upper cap on any single bin load (stretching factor 2).
    pub fn load_cap(&self) -> u32 {
        2 * self.g
    }
}

/// When an item class may be sent in the upper game.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverflowLegality {
    /// Some overflow completion keeps the load-sum constraint.
    #[default]
    Lenient,
    /// Every overflow completion not ruled out for class 0 keeps it.
    Strict,
}

impl OverflowLegality {
    /// Legal overflow bits for `class` when the bin load classes sum to
    /// `total`, ascending. Empty means the class cannot be sent.
    pub fn overflow_bits(self, class: u32, total: u64, cfg: &Config) -> Vec<u8> {
        let limit = cfg.m() as u64 * cfg.g() as u64 - 1;
        let candidates: &[u8] = if class == 0 { &[1] } else { &[0, 1] };
        let ok: Vec<u8> = candidates
            .iter()
            .copied()
            .filter(|&o| total + class as u64 + o as u64 <= limit)
            .collect();
        match self {
            OverflowLegality::Strict if ok.len() < candidates.len() => Vec::new(),
            _ => ok,
        }
    }
}

/// Exact game value `num / denom`.
///
/// Equality and ordering compare the represented rationals by
/// cross-multiplication, so `4/3 == 8/6`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Score {
    pub num: u64,
    pub denom: u64,
}

impl Score {
    pub fn new(num: u64, denom: u64) -> Self {
        assert!(denom > 0, "score denominator must be positive");
        Self { num, denom }
    }

    pub fn reduced(&self) -> (u64, u64) {
        let d = gcd(self.num, self.denom);
        (self.num / d, self.denom / d)
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.denom as f64
    }

    /// Decimal rendering with `places` fractional digits, rounded half to even
    /// using exact integer arithmetic.
    pub fn to_decimal(&self, places: u32) -> String {
        let scale = 10u128.pow(places);
        let n = self.num as u128 * scale;
        let d = self.denom as u128;
        let mut q = n / d;
        let r = n % d;
        match (2 * r).cmp(&d) {
            Ordering::Greater => q += 1,
            Ordering::Equal if q % 2 == 1 => q += 1,
            _ => {}
        }
        let int = q / scale;
        if places == 0 {
            return int.to_string();
        }
        let frac = q % scale;
        format!("{int}.{frac:0width$}", width = places as usize)
    }
}

impl PartialEq for Score {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Score {}

impl PartialOrd for Score {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Score {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.denom as u128).cmp(&(other.num as u128 * self.denom as u128))
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, d) = self.reduced();
        write!(f, "{n}/{d}")
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// Returns the non-increasing sort of `loads`.
pub fn canonicalize(loads: &[u32]) -> Vec<u32> {
    let mut v = loads.to_vec();
    v.sort_unstable_by(|a, b| b.cmp(a));
    v
}

/// One representative index per distinct load value of a canonical vector,
/// ascending by index. Placing an item in two bins of equal load leads to the
/// same canonical successor, so only the first of each run is kept.
pub fn distinct_bin_moves(loads: &[u32]) -> Vec<usize> {
    let mut out = Vec::with_capacity(loads.len());
    for (i, &l) in loads.iter().enumerate() {
        if i == 0 || loads[i - 1] != l {
            out.push(i);
        }
    }
    out
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("bin load {load} exceeds the cap {cap}")]
pub struct LoadCapExceeded {
    pub load: u32,
    pub cap: u32,
}

/// Bin loads kept sorted non-increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LoadVector(Vec<u32>);

impl LoadVector {
    pub fn empty(bins: usize) -> Self {
        Self(vec![0; bins])
    }

    pub fn from_loads(loads: &[u32]) -> Self {
        Self(canonicalize(loads))
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_load(&self) -> u32 {
        self.0.first().copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&l| l as u64).sum()
    }

    pub fn distinct_moves(&self) -> Vec<usize> {
        distinct_bin_moves(&self.0)
    }

    /// Adds `amount` to the bin at canonical index `bin` and re-sorts.
    pub fn place(&self, bin: usize, amount: u32, cap: u32) -> Result<Self, LoadCapExceeded> {
        let load = self.0[bin] + amount;
        if load > cap {
            return Err(LoadCapExceeded { load, cap });
        }
        let mut v = self.0.clone();
        v[bin] = load;
        // Only the touched entry can be out of place, and only towards the front.
        let mut i = bin;
        while i > 0 && v[i - 1] < v[i] {
            v.swap(i - 1, i);
            i -= 1;
        }
        Ok(Self(v))
    }
}

/// Multiset of nonnegative integer sizes (or classes), stored as dense
/// counts indexed by size with trailing zeros trimmed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ItemMultiset {
    counts: Vec<u32>,
}

impl ItemMultiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_sizes(sizes: &[u32]) -> Self {
        let mut ms = Self::new();
        for &s in sizes {
            ms.insert(s);
        }
        ms
    }

    pub fn insert(&mut self, size: u32) {
        let i = size as usize;
        if self.counts.len() <= i {
            self.counts.resize(i + 1, 0);
        }
        self.counts[i] += 1;
    }

    pub fn with(&self, size: u32) -> Self {
        let mut next = self.clone();
        next.insert(size);
        next
    }

    /// Removes one copy of `size`; returns false if absent.
    pub fn remove(&mut self, size: u32) -> bool {
        match self.counts.get_mut(size as usize) {
            Some(c) if *c > 0 => {
                *c -= 1;
                while self.counts.last() == Some(&0) {
                    self.counts.pop();
                }
                true
            }
            _ => false,
        }
    }

    pub fn count(&self, size: u32) -> u32 {
        self.counts.get(size as usize).copied().unwrap_or(0)
    }

    /// `(size, count)` pairs with nonzero count, ascending by size.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(s, &c)| (s as u32, c))
    }

    pub fn len(&self) -> usize {
        self.counts.iter().map(|&c| c as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total_mass(&self) -> u64 {
        self.iter().map(|(s, c)| s as u64 * c as u64).sum()
    }

    pub fn max_size(&self) -> Option<u32> {
        if self.counts.is_empty() {
            None
        } else {
            Some(self.counts.len() as u32 - 1)
        }
    }

    /// All sizes, non-increasing.
    pub fn sizes_desc(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.len());
        for (s, c) in self.iter().collect::<Vec<_>>().into_iter().rev() {
            out.extend(std::iter::repeat_n(s, c as usize));
        }
        out
    }
}
