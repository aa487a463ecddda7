//! Fixed workloads shared by the criterion benches.

use stretch_core::{Config, ItemMultiset};

/// `(m, g)` pairs small enough to solve many times per second.
pub const LOWER_INSTANCES: &[(u32, u32)] = &[(2, 3), (2, 6), (3, 3), (2, 12)];
pub const UPPER_INSTANCES: &[(u32, u32)] = &[(2, 3), (2, 6), (3, 3)];

pub fn config(m: u32, g: u32) -> Config {
    Config::new(m, g).expect("bench instances are valid")
}

/// Every multiset of sizes `1..=max_size` with at most `max_n` items.
pub fn multisets(max_n: usize, max_size: u32) -> Vec<ItemMultiset> {
    fn go(prefix: &mut Vec<u32>, top: u32, max_n: usize, out: &mut Vec<ItemMultiset>) {
        out.push(ItemMultiset::from_sizes(prefix));
        if prefix.len() == max_n {
            return;
        }
        for s in 1..=top {
            prefix.push(s);
            go(prefix, s, max_n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), max_size, max_n, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiset_count_matches_stars_and_bars() {
        // multisets of size <= 3 over 2 values: 1 + 2 + 3 + 4
        assert_eq!(multisets(3, 2).len(), 10);
    }
}
