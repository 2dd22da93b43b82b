//! Seeded, resumable scans: many independent rank searches over a grid of
//! couplings, farmed out to a thread pool.
//!
//! Trial `k` runs grid point `k mod |grid|` with seed `mix(base_seed, k)`,
//! so results never depend on the thread count. Every finished trial is
//! appended to a JSON-lines journal; rerunning with the same journal skips
//! what is already there. The CSV is written once all trials are journaled,
//! sorted by trial index.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_coupling, CouplingStrategy, ScanArgs};
use crate::param::SampleMode;
use crate::recoverability::{rmax_search, RmaxOptions, SearchStrategy, DEFAULT_REL_TOL, DEFAULT_RETRIES};
use crate::seed;
use crate::{Error, Result};

/// First line of every scan CSV.
pub const CSV_HEADER_COMMENT: &str = "# tenreco-scan v1";

const CSV_COLUMNS: &str =
    "trial,M,I,T,strategy,seed,coupling_hash,degrees,d_spread,P,defect_class,r_max,necessary_bound,defect_bound,achieved";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPoint {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "I")]
    pub i: usize,
    #[serde(rename = "T", default)]
    pub t: Option<usize>,
    pub strategy: CouplingStrategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub name: String,
    pub grid: Vec<GridPoint>,
    pub base_seed: u64,
    /// Total trials, assigned to grid points round-robin.
    pub trials: usize,
    #[serde(default = "default_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_retries")]
    pub retries: usize,
    #[serde(default)]
    pub search: SearchStrategy,
    #[serde(default)]
    pub mode: SampleMode,
    /// Falls back to `TENRECO_THREADS`, then to the number of cores.
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub journal: Option<PathBuf>,
}

fn default_tol() -> f64 {
    DEFAULT_REL_TOL
}

fn default_retries() -> usize {
    DEFAULT_RETRIES
}

impl ScanConfig {
    fn base(name: &str, grid: Vec<GridPoint>, trials: usize) -> Self {
        Self {
            name: name.into(),
            grid,
            base_seed: 0,
            trials,
            rel_tol: DEFAULT_REL_TOL,
            retries: DEFAULT_RETRIES,
            search: SearchStrategy::CapFirst,
            mode: SampleMode::Generic,
            threads: None,
            out: None,
            journal: None,
        }
    }

    /// `rand-M8-I4`, `bal-M8-I4` or `full-sweep`.
    pub fn preset(name: &str) -> Result<Self> {
        let m8 = |strategy| -> Vec<GridPoint> {
            (4..=16)
                .map(|t| GridPoint {
                    m: 8,
                    i: 4,
                    t: Some(t),
                    strategy,
                })
                .collect()
        };
        Ok(match name {
            "rand-M8-I4" => Self::base(name, m8(CouplingStrategy::Random), 1000),
            "bal-M8-I4" => Self::base(name, m8(CouplingStrategy::Balanced), 100),
            "full-sweep" => {
                let grid: Vec<GridPoint> = (4..=7)
                    .flat_map(|m| {
                        (2..=4).map(move |i| GridPoint {
                            m,
                            i,
                            t: None,
                            strategy: CouplingStrategy::Full,
                        })
                    })
                    .collect();
                let n = grid.len();
                Self::base(name, grid, n)
            }
            other => {
                return Err(Error::invalid(format!(
                    "unknown preset '{other}'; expected rand-M8-I4, bal-M8-I4 or full-sweep"
                )))
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("scan needs at least one trial"));
        }
        if self.grid.is_empty() {
            return Err(Error::invalid("scan grid is empty"));
        }
        for g in &self.grid {
            if g.m < 4 || g.i < 2 {
                return Err(Error::invalid(format!("grid point {g:?} needs M >= 4 and I >= 2")));
            }
            let needs_t = matches!(g.strategy, CouplingStrategy::Random | CouplingStrategy::Balanced);
            if needs_t && g.t.is_none() {
                return Err(Error::invalid(format!("grid point {g:?} needs T")));
            }
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::invalid("rel_tol must be positive"));
        }
        Ok(())
    }

    /// Hash of everything that affects results.
    pub fn fingerprint(&self) -> u64 {
        let key = serde_json::json!({
            "grid": self.grid,
            "base_seed": self.base_seed,
            "trials": self.trials,
            "rel_tol": self.rel_tol,
            "retries": self.retries,
            "search": self.search,
            "mode": self.mode,
        });
        seed::hash_words(key.to_string().bytes().map(u64::from))
    }

    pub fn trial_seed(&self, k: usize) -> u64 {
        seed::mix(self.base_seed, k as u64)
    }

    pub fn grid_point(&self, k: usize) -> GridPoint {
        self.grid[k % self.grid.len()]
    }
}

/// One finished trial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanRow {
    pub trial: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "I")]
    pub i: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub strategy: CouplingStrategy,
    pub seed: u64,
    pub coupling_hash: String,
    pub degrees: Vec<usize>,
    pub d_spread: usize,
    #[serde(rename = "P")]
    pub pairs: usize,
    pub defect_class: String,
    pub r_max: usize,
    pub necessary_bound: usize,
    pub defect_bound: Option<usize>,
    pub achieved: bool,
}

impl ScanRow {
    fn csv(&self) -> String {
        let strategy = serde_json::to_value(self.strategy).expect("enum serializes");
        let degrees: Vec<String> = self.degrees.iter().map(usize::to_string).collect();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.trial,
            self.m,
            self.i,
            self.t,
            strategy.as_str().unwrap_or_default(),
            self.seed,
            self.coupling_hash,
            degrees.join(";"),
            self.d_spread,
            self.pairs,
            self.defect_class,
            self.r_max,
            self.necessary_bound,
            self.defect_bound.map(|d| d.to_string()).unwrap_or_default(),
            self.achieved
        )
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum JournalEntry {
    Header { scan: String, fingerprint: String },
    Row(ScanRow),
    Failed { trial: usize, error: String },
}

pub fn run_trial(cfg: &ScanConfig, k: usize) -> Result<ScanRow> {
    let g = cfg.grid_point(k);
    let s = cfg.trial_seed(k);
    let (c, _) = build_coupling(g.m, g.strategy, g.t, None, s)?;
    let opts = RmaxOptions {
        rel_tol: cfg.rel_tol,
        retries_per_r: cfg.retries,
        r_cap: None,
        strategy: cfg.search,
        mode: cfg.mode,
    };
    let res = rmax_search(&c, g.i, seed::mix(s, 1), opts)?;
    let st = c.stats();
    Ok(ScanRow {
        trial: k,
        m: g.m,
        i: g.i,
        t: st.t,
        strategy: g.strategy,
        seed: s,
        coupling_hash: format!("{:016x}", c.content_hash()),
        d_spread: st.degree_spread(),
        degrees: st.degrees,
        pairs: st.pairs,
        defect_class: st.defect_class.to_string(),
        r_max: res.r_max,
        necessary_bound: res.necessary_bound,
        defect_bound: res.defect_bound,
        achieved: res.achieved,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOutcome {
    pub total: usize,
    pub completed: usize,
    /// Present once every trial is done and the CSV has been written.
    pub rows: Option<Vec<ScanRow>>,
}

fn load_journal(path: &Path, cfg: &ScanConfig) -> Result<BTreeMap<usize, ScanRow>> {
    let mut done = BTreeMap::new();
    if !path.exists() {
        let header = JournalEntry::Header {
            scan: cfg.name.clone(),
            fingerprint: format!("{:016x}", cfg.fingerprint()),
        };
        fs::write(path, serde_json::to_string(&header)? + "\n")?;
        return Ok(done);
    }
    let want = format!("{:016x}", cfg.fingerprint());
    for (n, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        // A torn final line from an interrupted write is skipped.
        let Ok(entry) = serde_json::from_str::<JournalEntry>(&line) else {
            continue;
        };
        match entry {
            JournalEntry::Header { fingerprint, .. } => {
                if fingerprint != want {
                    return Err(Error::invalid(format!(
                        "journal {} belongs to a different scan configuration",
                        path.display()
                    )));
                }
            }
            JournalEntry::Row(row) => {
                if n == 0 {
                    return Err(Error::invalid(format!("journal {} has no header", path.display())));
                }
                done.insert(row.trial, row);
            }
            JournalEntry::Failed { .. } => {}
        }
    }
    Ok(done)
}

fn thread_count(cfg: &ScanConfig) -> Result<usize> {
    if let Some(t) = cfg.threads {
        return Ok(t);
    }
    match std::env::var("TENRECO_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("TENRECO_THREADS='{v}' is not a number"))),
        Err(_) => Ok(0),
    }
}

/// Runs the missing trials (at most `limit` of them), journaling each; once
/// all are done, writes the CSV.
pub fn run_scan(cfg: &ScanConfig, csv: &Path, journal: &Path, limit: Option<usize>) -> Result<ScanOutcome> {
    cfg.validate()?;
    let mut done = load_journal(journal, cfg)?;
    let pending: Vec<usize> = (0..cfg.trials)
        .filter(|k| !done.contains_key(k))
        .take(limit.unwrap_or(usize::MAX))
        .collect();

    let writer = Mutex::new(OpenOptions::new().append(true).open(journal)?);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(cfg)?)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let results: Vec<(usize, Result<ScanRow>)> = pool.install(|| {
        pending
            .par_iter()
            .map(|&k| {
                let res = run_trial(cfg, k);
                let entry = match &res {
                    Ok(row) => JournalEntry::Row(row.clone()),
                    Err(e) => JournalEntry::Failed {
                        trial: k,
                        error: e.to_string(),
                    },
                };
                let line = serde_json::to_string(&entry).expect("entry serializes") + "\n";
                let mut w = writer.lock().expect("journal lock");
                let io = w.write_all(line.as_bytes()).and_then(|_| w.flush());
                (k, io.map_err(Error::from).and(res))
            })
            .collect()
    });

    let mut first_err = None;
    for (k, r) in results {
        match r {
            Ok(row) => {
                done.insert(k, row);
            }
            Err(e) => {
                first_err.get_or_insert((k, e));
            }
        }
    }
    if let Some((k, e)) = first_err {
        let msg = format!("trial {k} ({:?}): {e}", cfg.grid_point(k));
        return Err(match e {
            Error::ResourceExhausted(_) => Error::ResourceExhausted(msg),
            Error::Infeasible(_) => Error::Infeasible(msg),
            Error::Io(io) => Error::Io(io),
            _ => Error::InvalidArgument(msg),
        });
    }

    let completed = done.len();
    if completed < cfg.trials {
        return Ok(ScanOutcome {
            total: cfg.trials,
            completed,
            rows: None,
        });
    }
    let rows: Vec<ScanRow> = done.into_values().collect();
    let mut text = format!("{CSV_HEADER_COMMENT}\n{CSV_COLUMNS}\n");
    for r in &rows {
        text.push_str(&r.csv());
        text.push('\n');
    }
    fs::write(csv, text)?;
    Ok(ScanOutcome {
        total: cfg.trials,
        completed,
        rows: Some(rows),
    })
}

pub(super) fn cmd_scan(a: ScanArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = match (&a.preset, &a.config) {
        (Some(p), _) => ScanConfig::preset(p)?,
        (None, Some(path)) => serde_json::from_str(&fs::read_to_string(path)?)?,
        (None, None) => return Err(Error::invalid("scan needs --preset or --config")),
    };
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(s) = a.seed {
        cfg.base_seed = s;
    }
    if a.threads.is_some() {
        cfg.threads = a.threads;
    }
    let journal = a
        .journal
        .or_else(|| cfg.journal.clone())
        .unwrap_or_else(|| PathBuf::from(format!("{}.journal", a.out.display())));
    let outcome = run_scan(&cfg, &a.out, &journal, a.limit)?;
    match outcome.rows {
        Some(rows) => {
            let achieved = rows.iter().filter(|r| r.achieved).count();
            writeln!(
                out,
                "scan {}: {} trials, {} reach the necessary bound; wrote {}",
                cfg.name,
                rows.len(),
                achieved,
                a.out.display()
            )?;
        }
        None => writeln!(
            out,
            "scan {}: {}/{} trials journaled in {}; rerun to resume",
            cfg.name,
            outcome.completed,
            outcome.total,
            journal.display()
        )?,
    }
    Ok(())
}
