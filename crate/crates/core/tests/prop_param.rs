//! Property suite for the marginal map and its Jacobian.

mod common;

use proptest::prelude::*;
use tenreco::coupling::Coupling;
use tenreco::param::{jacobian, mu, sample_params, ParamVector, SampleMode};

const FD_STEP: f64 = 1e-6;
const FD_TOL: f64 = 1e-5;

fn generic(c: &Coupling, i: usize, r: usize, seed: u64) -> ParamVector<f64> {
    sample_params(c.num_vars(), i, r, seed, SampleMode::Generic).unwrap().to_f64()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn jacobian_matches_central_differences(
        c in common::coupling(4..=6, 8), i in 2usize..=4, r in 1usize..=4, seed: u64,
    ) {
        let theta = generic(&c, i, r, seed);
        let j = jacobian(&theta, &c).unwrap().matrix;
        let scale = j.amax().max(1.0);
        for col in 0..theta.as_slice().len() {
            let (mut up, mut down) = (theta.clone(), theta.clone());
            up.as_mut_slice()[col] += FD_STEP;
            down.as_mut_slice()[col] -= FD_STEP;
            let (yu, yd) = (mu(&up, &c).unwrap().y, mu(&down, &c).unwrap().y);
            for row in 0..j.nrows() {
                let fd = (yu[row] - yd[row]) / (2.0 * FD_STEP);
                prop_assert!((fd - j[(row, col)]).abs() / scale < FD_TOL, "row {row} col {col}");
            }
        }
    }

    #[test]
    fn jacobian_shape(c in common::coupling(4..=7, 12), i in 2usize..=4, r in 1usize..=5, seed: u64) {
        let m = c.num_vars();
        let j = jacobian(&generic(&c, i, r, seed), &c).unwrap();
        prop_assert_eq!(j.ncols(), r * (1 + m * (i - 1)));
        prop_assert_eq!(j.nrows(), c.num_triplets() * i.pow(3));
    }

    #[test]
    fn lambda_column_is_unit_weight_term(
        c in common::coupling(4..=6, 8), i in 2usize..=4, r in 1usize..=4, seed: u64,
    ) {
        let theta = generic(&c, i, r, seed);
        let j = jacobian(&theta, &c).unwrap();
        for k in 0..r {
            let mut block = theta.block(k).to_vec();
            block[0] = 1.0;
            let single = ParamVector::from_blocks(c.num_vars(), i, &[block]).unwrap();
            let y = mu(&single, &c).unwrap().y;
            let col = j.matrix.column(j.lambda_column(k));
            for (a, b) in col.iter().zip(&y) {
                prop_assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn zero_blocks_follow_incidence(
        c in common::coupling(4..=7, 10), i in 2usize..=3, r in 1usize..=3, seed: u64,
    ) {
        let theta = generic(&c, i, r, seed);
        let j = jacobian(&theta, &c).unwrap();
        let v = c.incidence();
        let rows = i.pow(3);
        for t in 0..c.num_triplets() {
            for m in 0..c.num_vars() {
                for k in 0..r {
                    let nonzero = (0..i - 1).any(|q| {
                        let col = j.factor_column(k, m, q);
                        (t * rows..(t + 1) * rows).any(|row| j.matrix[(row, col)] != 0.0)
                    });
                    prop_assert_eq!(nonzero, v.get(t, m) == 1, "triplet {} variable {}", t, m);
                }
            }
        }
    }

    #[test]
    fn rational_and_float_jacobians_agree(
        c in common::coupling(4..=5, 6), i in 2usize..=3, r in 1usize..=3, seed: u64,
    ) {
        let p = sample_params(c.num_vars(), i, r, seed, SampleMode::Rational).unwrap();
        let exact = jacobian(&p.to_rational().unwrap(), &c).unwrap().matrix;
        let float = jacobian(&p.to_f64(), &c).unwrap().matrix;
        for (e, f) in exact.iter().zip(float.iter()) {
            prop_assert!((tenreco::exact::to_f64(e) - f).abs() <= 1e-14);
        }
    }

    #[test]
    fn samples_are_feasible_prefixes(m in 4usize..=7, i in 2usize..=5, r in 2usize..=5, seed: u64) {
        for mode in [SampleMode::Generic, SampleMode::Rational] {
            let big = sample_params(m, i, r, seed, mode).unwrap();
            let small = sample_params(m, i, r - 1, seed, mode).unwrap();
            prop_assert!(big.to_f64().is_feasible(true));
            prop_assert_eq!(big.to_f64().prefix(r - 1).unwrap(), small.to_f64());
        }
    }
}
