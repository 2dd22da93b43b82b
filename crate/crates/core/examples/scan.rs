//! Runs a small seeded scan, interrupts it, resumes it from the journal and
//! checks the CSV matches an uninterrupted run.
//!
//! ```bash
//! cargo run --release --example scan
//! ```

use std::collections::BTreeMap;
use std::fs;

use tenreco::cli::{run_scan, CouplingStrategy, GridPoint, ScanConfig};
use tenreco::recoverability::SearchStrategy;

fn main() -> tenreco::Result<()> {
    let dir = tempfile::tempdir()?;
    let grid = (6..=10)
        .map(|t| GridPoint { m: 7, i: 3, t: Some(t), strategy: CouplingStrategy::Random })
        .collect();
    let cfg = ScanConfig {
        name: "example".into(),
        grid,
        base_seed: 1,
        trials: 40,
        search: SearchStrategy::CapFirst,
        ..ScanConfig::preset("rand-M8-I4")?
    };

    let (full, resumed) = (dir.path().join("full.csv"), dir.path().join("resumed.csv"));
    let outcome = run_scan(&cfg, &full, &dir.path().join("full.journal"), None)?;
    let rows = outcome.rows.expect("uninterrupted run completes");

    let journal = dir.path().join("resumed.journal");
    let partial = run_scan(&cfg, &resumed, &journal, Some(15))?;
    println!("interrupted after {}/{} trials", partial.completed, partial.total);
    run_scan(&cfg, &resumed, &journal, None)?;
    println!("resumed CSV identical: {}", fs::read(&full)? == fs::read(&resumed)?);

    let mut by_t: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for r in &rows {
        let e = by_t.entry(r.t).or_default();
        e.0 += 1;
        e.1 += r.achieved as usize;
    }
    for (t, (n, ok)) in by_t {
        println!("T={t:<3} {ok}/{n} trials reach the necessary bound");
    }
    Ok(())
}
