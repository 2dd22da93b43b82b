//! Samples parameters, evaluates the stacked 3D marginals and their
//! Jacobian, and spot-checks one column against central differences.
//!
//! ```bash
//! cargo run --example jacobian
//! ```

use tenreco::coupling::Coupling;
use tenreco::param::{jacobian, mu, sample_params, SampleMode};

fn main() -> tenreco::Result<()> {
    // Variables 1, 3, 4 and 2, 3, 4 in 1-based terms.
    let c = Coupling::new(4, [[0, 2, 3], [1, 2, 3]])?;
    let (i, r) = (3, 2);
    let theta = sample_params(c.num_vars(), i, r, 11, SampleMode::Generic)?.to_f64();
    println!("theta has {} entries ({} per term)", theta.as_slice().len(), theta.block_len());

    let y = mu(&theta, &c)?;
    for t in 0..c.num_triplets() {
        let s: f64 = y.block(t).iter().sum();
        println!("marginal {t}: {} entries, total mass {s:.12} (sum of weights)", y.block(t).len());
    }

    let j = jacobian(&theta, &c)?;
    println!("Jacobian {} x {}", j.nrows(), j.ncols());

    // Variable 1 is absent from the second triplet, so its block is zero there.
    let rows = i.pow(3);
    for t in 0..c.num_triplets() {
        let col = j.factor_column(0, 0, 0);
        let nnz = (t * rows..(t + 1) * rows).filter(|&row| j.matrix[(row, col)] != 0.0).count();
        println!("triplet {t}, variable 1: {nnz} nonzero rows");
    }

    let col = j.factor_column(1, 2, 1);
    let h = 1e-6;
    let (mut up, mut down) = (theta.clone(), theta.clone());
    up.as_mut_slice()[col] += h;
    down.as_mut_slice()[col] -= h;
    let (yu, yd) = (mu(&up, &c)?.y, mu(&down, &c)?.y);
    let err = (0..j.nrows())
        .map(|row| ((yu[row] - yd[row]) / (2.0 * h) - j.matrix[(row, col)]).abs())
        .fold(0.0, f64::max);
    println!("column {col}: max |analytic - central difference| = {err:.2e}");
    Ok(())
}
