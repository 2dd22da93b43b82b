//! Command-line front end.
//!
//! Subcommands: `coupling gen|info`, `rmax`, `bounds`, `scan`, `verify`.
//! Exit codes: 0 success, 1 I/O, 2 usage or invalid input, 3 infeasible or
//! rank-deficient, 4 resource limit.

mod scan;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::coupling::{
    even_partition, make_balanced, make_cartesian, make_double_deg1, make_full, make_random, make_single_deg1,
    Coupling, Partition,
};
use crate::param::SampleMode;
use crate::recoverability::{self, Certificate, RmaxOptions, RmaxResult, SearchStrategy, DEFAULT_REL_TOL, DEFAULT_RETRIES};
use crate::{Error, Result};

pub use scan::{run_scan, GridPoint, ScanConfig, ScanOutcome, ScanRow, CSV_HEADER_COMMENT};

#[derive(Debug, Parser)]
#[command(name = "tenreco", version, about = "Recoverability and identifiability of coupled CP models of 3D marginals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate or inspect couplings.
    #[command(subcommand)]
    Coupling(CouplingCmd),
    /// Largest rank with a full column rank Jacobian.
    Rmax(RmaxArgs),
    /// Every applicable rank bound for a configuration.
    Bounds(BoundsArgs),
    /// Seeded, resumable batch of rank searches.
    Scan(ScanArgs),
    /// Recheck a certificate from `rmax` output.
    Verify(VerifyArgs),
}

#[derive(Debug, Subcommand)]
pub enum CouplingCmd {
    /// Write a coupling as JSON.
    Gen {
        #[command(flatten)]
        spec: CouplingSpec,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print T, degrees, pair count, defect class and connectivity.
    Info {
        #[command(flatten)]
        spec: CouplingSpec,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum CouplingStrategy {
    Full,
    Random,
    Balanced,
    Cartesian,
    /// Every triplet over `2..=M` plus `{1, M−1, M}`.
    SingleDeg1,
    /// Every triplet over `3..=M` plus `{1, 2, M}`.
    DoubleDeg1,
}

/// A coupling given either as a JSON file or by generator flags.
#[derive(Debug, Clone, Args)]
pub struct CouplingSpec {
    /// Coupling JSON file.
    #[arg(long, conflicts_with_all = ["m", "strategy", "t", "partition"])]
    pub coupling: Option<PathBuf>,
    #[arg(long = "M")]
    pub m: Option<usize>,
    #[arg(long, value_enum, default_value = "full")]
    pub strategy: CouplingStrategy,
    #[arg(long = "T")]
    pub t: Option<usize>,
    /// Cartesian partition, e.g. `1/23/45` or `1/2,3/4,5`; defaults to the
    /// even partition.
    #[arg(long)]
    pub partition: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl CouplingSpec {
    /// The coupling and, for Cartesian couplings, its partition.
    pub fn resolve(&self) -> Result<(Coupling, Option<Partition>)> {
        if let Some(path) = &self.coupling {
            return Ok((Coupling::from_json(&fs::read_to_string(path)?)?, None));
        }
        let m = self.m.ok_or_else(|| Error::invalid("--M is required unless --coupling is given"))?;
        build_coupling(m, self.strategy, self.t, self.partition.as_deref(), self.seed)
    }
}

pub fn build_coupling(
    m: usize,
    strategy: CouplingStrategy,
    t: Option<usize>,
    partition: Option<&str>,
    seed: u64,
) -> Result<(Coupling, Option<Partition>)> {
    let need_t = || t.ok_or_else(|| Error::invalid(format!("--T is required for strategy {strategy:?}")));
    Ok(match strategy {
        CouplingStrategy::Full => (make_full(m)?, None),
        CouplingStrategy::Random => (make_random(m, need_t()?, seed)?, None),
        CouplingStrategy::Balanced => (make_balanced(m, need_t()?, seed)?, None),
        CouplingStrategy::SingleDeg1 => (make_single_deg1(m)?, None),
        CouplingStrategy::DoubleDeg1 => (make_double_deg1(m)?, None),
        CouplingStrategy::Cartesian => {
            let p = match partition {
                Some(s) => s.parse::<Partition>()?,
                None => even_partition(m)?,
            };
            if p.num_vars() != m {
                return Err(Error::invalid(format!("partition {p} does not cover M={m} variables")));
            }
            (make_cartesian(&p)?, Some(p))
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SearchArg {
    Incremental,
    CapFirst,
    Bisection,
}

impl From<SearchArg> for SearchStrategy {
    fn from(s: SearchArg) -> Self {
        match s {
            SearchArg::Incremental => SearchStrategy::Incremental,
            SearchArg::CapFirst => SearchStrategy::CapFirst,
            SearchArg::Bisection => SearchStrategy::Bisection,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Generic,
    Rational,
}

impl From<ModeArg> for SampleMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Generic => SampleMode::Generic,
            ModeArg::Rational => SampleMode::Rational,
        }
    }
}

#[derive(Debug, Args)]
pub struct RmaxArgs {
    #[command(flatten)]
    pub spec: CouplingSpec,
    #[arg(long = "I")]
    pub i: usize,
    /// Seed for the parameter draws (the coupling uses `--seed`).
    #[arg(long)]
    pub theta_seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_REL_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_RETRIES)]
    pub retries: usize,
    #[arg(long)]
    pub r_cap: Option<usize>,
    #[arg(long, value_enum, default_value = "incremental")]
    pub search: SearchArg,
    #[arg(long, value_enum, default_value = "generic")]
    pub mode: ModeArg,
    /// Write the full result JSON here and print a summary instead.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub spec: CouplingSpec,
    #[arg(long = "I")]
    pub i: usize,
    /// Attach an empirical rank from a previous search.
    #[arg(long)]
    pub rmax: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Built-in experiment: `rand-M8-I4`, `bal-M8-I4` or `full-sweep`.
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
    /// ScanConfig JSON file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Completed-trial journal; defaults to `<out>.journal`.
    #[arg(long)]
    pub journal: Option<PathBuf>,
    /// Worker threads; `TENRECO_THREADS` is the fallback.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Stop after this many newly completed trials.
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// JSON written by `rmax`.
    #[arg(long)]
    pub certificate: PathBuf,
    /// Rank to check; defaults to the certified maximum.
    #[arg(long = "R")]
    pub r: Option<usize>,
    /// Exact rational elimination instead of SVD.
    #[arg(long)]
    pub exact: bool,
    #[arg(long)]
    pub tol: Option<f64>,
}

/// Summary printed by `verify`.
#[derive(Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    #[serde(rename = "R")]
    pub r: usize,
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub method: recoverability::RankMethod,
    pub full_column_rank: bool,
    pub tail: Vec<f64>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    execute(cli, out)
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Coupling(CouplingCmd::Gen { spec, out: path }) => {
            let (c, _) = spec.resolve()?;
            let js = c.to_json();
            match path {
                Some(p) => fs::write(p, js + "\n")?,
                None => writeln!(out, "{js}")?,
            }
        }
        Command::Coupling(CouplingCmd::Info { spec }) => {
            let (c, _) = spec.resolve()?;
            writeln!(out, "{}", serde_json::to_string(&c.stats())?)?;
        }
        Command::Rmax(a) => {
            let (c, _) = a.spec.resolve()?;
            let opts = RmaxOptions {
                rel_tol: a.tol,
                retries_per_r: a.retries,
                r_cap: a.r_cap,
                strategy: a.search.into(),
                mode: a.mode.into(),
            };
            let res = recoverability::rmax_search(&c, a.i, a.theta_seed.unwrap_or(a.spec.seed), opts)?;
            match a.out {
                Some(p) => {
                    fs::write(&p, res.to_json() + "\n")?;
                    writeln!(
                        out,
                        "R_max={} necessary_bound={} achieved={} certificate_seed={}",
                        res.r_max,
                        res.necessary_bound,
                        res.achieved,
                        res.certificates.last().map_or(res.seed, |c| c.seed)
                    )?;
                }
                None => writeln!(out, "{}", res.to_json())?,
            }
        }
        Command::Bounds(a) => {
            let (c, p) = a.spec.resolve()?;
            let rep = bounds::report(&c, a.i, p.as_ref(), a.rmax)?;
            match a.format {
                FormatArg::Json => writeln!(out, "{}", rep.to_json())?,
                FormatArg::Csv => writeln!(out, "{}\n{}", bounds::BoundReport::csv_header(), rep.csv_row())?,
            }
            if !rep.violations.is_empty() {
                return Err(Error::Infeasible(format!("bound ordering violated: {}", rep.violations.join("; "))));
            }
        }
        Command::Scan(a) => scan::cmd_scan(a, out)?,
        Command::Verify(a) => verify(a, out)?,
    }
    Ok(())
}

fn verify(a: VerifyArgs, out: &mut dyn Write) -> Result<()> {
    let res = RmaxResult::from_json(&fs::read_to_string(&a.certificate)?)?;
    let r = a.r.unwrap_or(res.r_max);
    if r == 0 {
        return Err(Error::invalid("nothing to verify at R = 0"));
    }
    // Ranks above the certified maximum reuse its seed; such a check is
    // expected to fail when the maximum is tight.
    let seed = res
        .certificate(r)
        .or_else(|| res.certificates.last().copied())
        .map_or(res.seed, |c| c.seed);
    let rep = recoverability::verify_certificate(
        &res.coupling,
        res.bins,
        Certificate { r, seed },
        res.mode,
        a.exact,
        a.tol.unwrap_or(res.rel_tol),
    )?;
    let summary = VerifyReport {
        r,
        seed,
        rows: rep.rows,
        cols: rep.cols,
        rank: rep.rank,
        method: rep.method,
        full_column_rank: rep.full_column_rank,
        tail: rep.relative_tail(),
    };
    writeln!(out, "{}", serde_json::to_string(&summary)?)?;
    if !rep.full_column_rank {
        return Err(Error::Infeasible(format!(
            "rank {} < {} columns at R={r}; relative singular value tail {:?}",
            rep.rank,
            rep.cols,
            summary.tail
        )));
    }
    Ok(())
}

/// Entry point for the binary; returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
