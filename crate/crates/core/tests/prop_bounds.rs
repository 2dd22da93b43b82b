//! Property suite for the identifiability bounds.

mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};
use tenreco::bounds::{kruskal_rank, report, BoundKind};
use tenreco::coupling::{make_cartesian, make_full};
use tenreco::seed;

#[test]
fn sufficient_bounds_never_exceed_necessary_on_full_couplings() {
    for m in 5..=15 {
        let c = make_full(m).unwrap();
        for i in 2..=6 {
            let rep = report(&c, i, None, None).unwrap();
            let nb = rep.value("necessary").unwrap();
            for e in rep.entries.iter().filter(|e| e.kind == BoundKind::SufficientIdentifiability) {
                if let Some(v) = e.value {
                    assert!(v <= nb, "M={m} I={i}: {} = {v} > {nb}", e.name);
                }
            }
            assert!(rep.violations.is_empty(), "M={m} I={i}: {:?}", rep.violations);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn sufficient_bounds_never_exceed_necessary_on_cartesian(p in common::partition(5..=15), i in 2usize..=6) {
        let c = make_cartesian(&p).unwrap();
        let rep = report(&c, i, Some(&p), None).unwrap();
        prop_assert!(rep.violations.is_empty(), "{}: {:?}", p, rep.violations);
    }

    #[test]
    fn kruskal_rank_of_continuous_matrix_is_min(i in 1usize..=6, r in 1usize..=6, s: u64) {
        let mut rng = seed::rng(s);
        let a = DMatrix::from_fn(i, r, |_, _| StandardNormal.sample(&mut rng));
        prop_assert_eq!(kruskal_rank(&a, None).unwrap(), i.min(r));
    }

    #[test]
    fn report_round_trips_through_json(p in common::partition(5..=12), i in 2usize..=5) {
        let c = make_cartesian(&p).unwrap();
        let rep = report(&c, i, Some(&p), Some(1)).unwrap();
        let back: tenreco::bounds::BoundReport = serde_json::from_str(&rep.to_json()).unwrap();
        prop_assert_eq!(back, rep);
    }
}
