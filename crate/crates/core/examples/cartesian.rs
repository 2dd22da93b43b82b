//! Stacks the marginals of a Cartesian coupling into one order-3 tensor,
//! checks both constructions agree, and reduces its factors through `Q`.
//!
//! ```bash
//! cargo run --example cartesian
//! ```

use nalgebra::DMatrix;
use tenreco::cartesian::{
    block_factors, build_q, cartesian_ident_bound, even_partition_bound, reduced_factors, reduced_sizes, stack,
    stack_cpd,
};
use tenreco::coupling::{even_partition, Partition};
use tenreco::exact::Rational;
use tenreco::param::{sample_params, SampleMode};

fn main() -> tenreco::Result<()> {
    let p: Partition = "1/23/45".parse()?;
    let i = 3;
    let params = sample_params(p.num_vars(), i, 4, 3, SampleMode::Rational)?;
    let theta = params.to_f64();

    let a = stack(&theta, &p)?;
    let b = stack_cpd(&theta, &p)?;
    println!(
        "partition {p}: stacked tensor {:?}, blockwise vs CP construction differ by {:.1e}",
        a.tensor.dims(),
        a.tensor.max_abs_diff(&b.tensor)
    );

    // B = Q C holds exactly at rational points.
    let exact = params.to_rational()?;
    let bf = block_factors(&exact, &p)?;
    let c = reduced_factors(&exact, &p)?.c;
    for (n, mi) in p.sizes().into_iter().enumerate() {
        let q: DMatrix<Rational> = build_q(mi, i)?;
        println!("set {}: Q is {}x{}, B = Q C exactly: {}", n + 1, q.nrows(), q.ncols(), &q * &c[n] == bf[n]);
    }

    println!("\nsufficient ranks from the even partition, I=4:");
    for m in [9, 12, 15, 18] {
        let e = even_partition(m)?;
        println!(
            "M={m:<3} partition {e}  reduced sizes {:?}  bound {:?}  closed form {}",
            reduced_sizes(&e, 4),
            cartesian_ident_bound(&e, 4),
            even_partition_bound(m, 4)
        );
    }
    Ok(())
}
