//! Channel bookkeeping for the quadratic term of the flow equation.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

/// One way of distributing the external legs over the two vertices joined
/// by a kernel line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Channel {
    /// Legs attached to the first factor, ascending.
    pub first: Vec<usize>,
    /// The complementary legs, ascending.
    pub second: Vec<usize>,
    /// How many ordered assignments the channel stands for.
    pub multiplicity: usize,
}

/// All channels for `n` legs with `n1` on the first factor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelDecomposition {
    pub n: usize,
    pub n1: usize,
    pub channels: Vec<Channel>,
}

impl ChannelDecomposition {
    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// Number of ordered leg assignments covered.
    pub fn ordered_count(&self) -> usize {
        self.channels.iter().map(|c| c.multiplicity).sum()
    }
}

/// Inequivalent unordered pairs of leg subsets of sizes `n1` and `n - n1`.
///
/// When both sides have the same size a pair and its mirror image are the
/// same channel; it is listed once, with the subset holding leg 0 first,
/// and carries multiplicity 2 so that summing over `n1` counts every
/// ordered assignment exactly once.
pub fn rsy_channels(n: usize, n1: usize) -> ChannelDecomposition {
    assert!(n1 >= 1 && n1 < n, "split {n1} of {n} legs leaves a side empty");
    let balanced = 2 * n1 == n;
    let channels = (0..n)
        .combinations(n1)
        .filter(|first| !balanced || first[0] == 0)
        .map(|first| {
            let second = (0..n).filter(|i| !first.contains(i)).collect();
            Channel {
                first,
                second,
                multiplicity: if balanced { 2 } else { 1 },
            }
        })
        .collect();
    ChannelDecomposition { n, n1, channels }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    /// Distinct unordered pairs of image subsets over all permutations of the legs.
    fn orbit_count(n: usize, n1: usize) -> usize {
        let mut seen = BTreeSet::new();
        for perm in (0..n).permutations(n) {
            let mut a: Vec<usize> = perm[..n1].to_vec();
            let mut b: Vec<usize> = perm[n1..].to_vec();
            a.sort();
            b.sort();
            let pair = if a <= b { (a, b) } else { (b, a) };
            seen.insert(pair);
        }
        seen.len()
    }

    #[test]
    fn counts_match_brute_force_orbits() {
        assert_eq!(rsy_channels(4, 1).len(), 4);
        assert_eq!(rsy_channels(6, 3).len(), 10);
        assert_eq!(rsy_channels(2, 1).len(), 1);
        for n in 2..=6 {
            for n1 in 1..n {
                assert_eq!(rsy_channels(n, n1).len(), orbit_count(n, n1), "n={n} n1={n1}");
            }
        }
    }

    #[test]
    fn ordered_assignments_are_counted_once() {
        for n in 2..=6 {
            for n1 in 1..n {
                let binom = (0..n).combinations(n1).count();
                assert_eq!(rsy_channels(n, n1).ordered_count(), binom);
            }
        }
    }

    #[test]
    fn channels_partition_the_legs() {
        for ch in rsy_channels(6, 3).channels {
            let mut all: Vec<usize> = ch.first.iter().chain(&ch.second).copied().collect();
            all.sort();
            assert_eq!(all, (0..6).collect::<Vec<_>>());
            assert!(ch.first.contains(&0));
        }
    }
}
