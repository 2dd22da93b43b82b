//! Builds one coupling of each kind and prints its degree statistics.
//!
//! ```bash
//! cargo run --example couplings
//! ```

use tenreco::coupling::{
    even_partition, make_balanced, make_cartesian, make_double_deg1, make_full, make_random, make_single_deg1,
    Coupling,
};

fn show(label: &str, c: &Coupling) {
    let s = c.stats();
    println!(
        "{label:<14} M={} T={:<3} P={:<3} spread={} defect={:<18} degrees={:?}",
        c.num_vars(),
        s.t,
        s.pairs,
        s.degree_spread(),
        s.defect_class,
        s.degrees
    );
}

fn main() -> tenreco::Result<()> {
    let m = 8;
    show("full", &make_full(m)?);
    show("random T=10", &make_random(m, 10, 42)?);
    show("balanced T=8", &make_balanced(m, 8, 42)?);
    let p = even_partition(m)?;
    show(&format!("cartesian {p}"), &make_cartesian(&p)?);
    show("single_deg1", &make_single_deg1(m)?);
    show("double_deg1", &make_double_deg1(m)?);

    // Files use 1-based variables and are re-validated on load.
    let c = make_random(6, 5, 7)?;
    let json = c.to_json();
    println!("\n{json}");
    assert_eq!(Coupling::from_json(&json)?, c);

    let v = c.incidence();
    println!("\nincidence (rows are triplets):");
    for row in v.rows() {
        println!("  {row:?}");
    }
    Ok(())
}
