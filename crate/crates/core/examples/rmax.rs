//! Searches the largest rank with a full column rank Jacobian for a few
//! couplings and compares it with the counting and degree-1 bounds.
//!
//! ```bash
//! cargo run --release --example rmax
//! ```

use tenreco::coupling::{make_balanced, make_double_deg1, make_full, make_single_deg1, Coupling};
use tenreco::recoverability::{rmax_search, RmaxOptions, SearchStrategy};

fn main() -> tenreco::Result<()> {
    let i = 3;
    let cases: Vec<(&str, Coupling)> = vec![
        ("full M=5", make_full(5)?),
        ("full M=6", make_full(6)?),
        ("balanced M=6 T=6", make_balanced(6, 6, 1)?),
        ("single_deg1 M=6", make_single_deg1(6)?),
        ("double_deg1 M=6", make_double_deg1(6)?),
    ];
    let opts = RmaxOptions { strategy: SearchStrategy::CapFirst, ..Default::default() };
    println!("I={i}");
    for (label, c) in cases {
        let res = rmax_search(&c, i, 2024, opts)?;
        let defect = res.defect_bound.map(|d| d.to_string()).unwrap_or_else(|| "-".into());
        println!(
            "{label:<18} R_max={:<3} necessary={:<3} defect={defect:<3} tested={:?}",
            res.r_max,
            res.necessary_bound,
            res.trials.iter().map(|t| t.r).collect::<Vec<_>>()
        );
        if let Some(f) = &res.failure {
            println!("{:<18} at R={} the smallest relative singular value is {:.1e}", "", f.r, f.tail[f.tail.len() - 1]);
        }
    }
    Ok(())
}
