//! Shared generators for the property suites.

#![allow(dead_code)]

use proptest::prelude::*;
use rand::seq::SliceRandom;
use tenreco::coupling::{binomial, make_random, Coupling, Partition};
use tenreco::seed;

/// A random connected coupling with `M` in `ms` and at most `t_max` triplets.
pub fn coupling(ms: std::ops::RangeInclusive<usize>, t_max: usize) -> impl Strategy<Value = Coupling> {
    (ms, any::<u64>(), any::<u16>()).prop_map(move |(m, seed, pick)| {
        // M/2 triplets always admit a connected cover.
        let lo = m / 2;
        let hi = t_max.min(binomial(m, 3)).max(lo);
        let t = lo + pick as usize % (hi - lo + 1);
        make_random(m, t, seed).expect("a connected cover exists")
    })
}

/// A uniformly shuffled three-way split of `M` variables into non-empty sets.
pub fn partition(ms: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Partition> {
    (ms, any::<u64>()).prop_map(|(m, s)| {
        let mut rng = seed::rng(s);
        let mut vars: Vec<usize> = (0..m).collect();
        vars.shuffle(&mut rng);
        let a = 1 + rand::Rng::random_range(&mut rng, 0..m - 2);
        let b = 1 + rand::Rng::random_range(&mut rng, 0..m - a - 1);
        let sets = [vars[..a].to_vec(), vars[a..a + b].to_vec(), vars[a + b..].to_vec()];
        Partition::new(sets).expect("disjoint non-empty cover")
    })
}
