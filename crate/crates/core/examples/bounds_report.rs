//! Prints every applicable rank bound for full couplings as CSV, plus the
//! report of one Cartesian coupling with its partition.
//!
//! ```bash
//! cargo run --example bounds_report
//! ```

use tenreco::bounds::{report, BoundReport};
use tenreco::coupling::{make_cartesian, make_full, Partition};

fn main() -> tenreco::Result<()> {
    println!("{}", BoundReport::csv_header());
    for i in [4, 6] {
        for m in [9, 12, 15] {
            let rep = report(&make_full(m)?, i, None, None)?;
            println!("{}", rep.csv_row());
            for v in &rep.violations {
                eprintln!("ordering violation at M={m} I={i}: {v}");
            }
        }
    }

    let p: Partition = "1,2,3/4,5,6/7,8,9".parse()?;
    let rep = report(&make_cartesian(&p)?, 4, Some(&p), None)?;
    println!("\n{}", rep.to_json());
    Ok(())
}
