//! Certifies R_max at rational points and re-checks the certificate with
//! exact fraction-free elimination as well as the SVD.
//!
//! ```bash
//! cargo run --release --example exact_certificate
//! ```

use tenreco::coupling::make_single_deg1;
use tenreco::param::SampleMode;
use tenreco::recoverability::{rmax_search, verify_certificate, Certificate, RmaxOptions, DEFAULT_REL_TOL};

fn main() -> tenreco::Result<()> {
    let c = make_single_deg1(6)?;
    let i = 3;
    let opts = RmaxOptions { mode: SampleMode::Rational, ..Default::default() };
    let res = rmax_search(&c, i, 9, opts)?;
    println!(
        "single_deg1 M=6 I=3: R_max={} (necessary {}, degree-1 cap {:?})",
        res.r_max, res.necessary_bound, res.defect_bound
    );

    let cert = res.certificate(res.r_max).expect("R_max >= 1");
    let beyond = Certificate { r: cert.r + 1, seed: cert.seed };
    for cert in [cert, beyond] {
        let svd = verify_certificate(&c, i, cert, SampleMode::Rational, false, DEFAULT_REL_TOL)?;
        let exact = verify_certificate(&c, i, cert, SampleMode::Rational, true, DEFAULT_REL_TOL)?;
        println!(
            "R={} seed={:#x}: {} columns, SVD rank {}, exact rank {}, smallest σ/σ₁ {:.1e}",
            cert.r,
            cert.seed,
            svd.cols,
            svd.rank,
            exact.rank,
            svd.relative_tail().last().copied().unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
