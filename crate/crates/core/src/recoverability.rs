//! Rank tests on the Jacobian, degrees of freedom of the observed marginals,
//! and the search for the largest generically recoverable rank.
//!
//! A rank `R` is certified recoverable for a coupling when the Jacobian of
//! the marginal map is full column rank at some parameter point; such a
//! point is a *certificate*, stored as the seed that regenerates it through
//! [`sample_params`]. Because block `r` of a sample depends only on
//! `(seed, r)`, the certificate at rank `R` also certifies every `R' < R`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::coupling::{Coupling, CouplingStats, DefectClass};
use crate::exact::{self, Rational};
use crate::param::{self, sample_params, ParamVector, Params, SampleMode};
use crate::seed;
use crate::{Error, Result};

/// Default threshold on `σᵢ / σ₁`.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Default number of fresh draws after a rank-deficient one.
pub const DEFAULT_RETRIES: usize = 3;

/// Number of trailing singular values kept when a rank test fails.
pub const TAIL_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankMethod {
    Svd,
    ExactRational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub rows: usize,
    pub cols: usize,
    /// Descending; empty for exact rank.
    pub singular_values: Vec<f64>,
    pub rank: usize,
    /// `None` for exact rank.
    pub tolerance: Option<f64>,
    pub full_column_rank: bool,
    pub method: RankMethod,
}

impl RankReport {
    /// The smallest `TAIL_LEN` singular values relative to `σ₁`.
    pub fn relative_tail(&self) -> Vec<f64> {
        let Some(&s1) = self.singular_values.first() else {
            return Vec::new();
        };
        let start = self.singular_values.len().saturating_sub(TAIL_LEN);
        self.singular_values[start..]
            .iter()
            .map(|s| if s1 > 0.0 { s / s1 } else { 0.0 })
            .collect()
    }
}

/// Rank as the number of `σᵢ > rel_tol · σ₁`.
pub fn numerical_rank(j: &DMatrix<f64>, rel_tol: f64) -> Result<RankReport> {
    if j.is_empty() {
        return Err(Error::invalid("rank of an empty matrix"));
    }
    if !(rel_tol > 0.0) {
        return Err(Error::invalid(format!("rel_tol must be positive, got {rel_tol}")));
    }
    if j.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let mut sv: Vec<f64> = j.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let s1 = sv[0];
    let rank = if s1 > 0.0 {
        sv.iter().filter(|&&s| s > rel_tol * s1).count()
    } else {
        0
    };
    Ok(RankReport {
        rows: j.nrows(),
        cols: j.ncols(),
        singular_values: sv,
        rank,
        tolerance: Some(rel_tol),
        full_column_rank: rank == j.ncols(),
        method: RankMethod::Svd,
    })
}

/// Exact rank over ℚ by fraction-free elimination.
pub fn exact_rank_report(j: &DMatrix<Rational>) -> Result<RankReport> {
    if j.is_empty() {
        return Err(Error::invalid("rank of an empty matrix"));
    }
    let rank = exact::exact_rank(j)?;
    Ok(RankReport {
        rows: j.nrows(),
        cols: j.ncols(),
        singular_values: Vec::new(),
        rank,
        tolerance: None,
        full_column_rank: rank == j.ncols(),
        method: RankMethod::ExactRational,
    })
}

/// `N_obs = 1 + M(I−1) + P(I−1)² + T(I−1)³`.
pub fn n_obs(coupling: &Coupling, i: usize) -> usize {
    let s = coupling.stats();
    let k = i.saturating_sub(1);
    1 + coupling.num_vars() * k + s.pairs * k * k + s.t * k * k * k
}

/// `⌊N_obs / (1 + M(I−1))⌋`.
pub fn necessary_bound(coupling: &Coupling, i: usize) -> usize {
    n_obs(coupling, i) / param::block_len(coupling.num_vars(), i)
}

/// `I²` for a lone degree-1 variable, `I(I+1)/2` for two sharing a triplet.
pub fn defect_bound(stats: &CouplingStats, i: usize) -> Option<usize> {
    match stats.defect_class {
        DefectClass::None => None,
        DefectClass::SingleDeg1 => Some(i * i),
        DefectClass::DoubleDeg1Shared => Some(i * (i + 1) / 2),
    }
}

/// Order in which candidate ranks are tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStrategy {
    /// `R = 1, 2, …` until the first failure, growing one block at a time.
    #[default]
    Incremental,
    /// Test the cap first; on failure fall back to incremental growth.
    /// Cheapest when most couplings reach the cap.
    CapFirst,
    /// Test the cap first, then bisect. Valid because full column rank is
    /// inherited by every prefix of the column blocks.
    Bisection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmaxOptions {
    pub rel_tol: f64,
    pub retries_per_r: usize,
    /// Defaults to the necessary bound.
    pub r_cap: Option<usize>,
    pub strategy: SearchStrategy,
    pub mode: SampleMode,
}

impl Default for RmaxOptions {
    fn default() -> Self {
        Self {
            rel_tol: DEFAULT_REL_TOL,
            retries_per_r: DEFAULT_RETRIES,
            r_cap: None,
            strategy: SearchStrategy::default(),
            mode: SampleMode::default(),
        }
    }
}

/// `sample_params(M, I, r, seed, mode)` has a full column rank Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    #[serde(rename = "R")]
    pub r: usize,
    pub seed: u64,
}

/// One tested rank: how many redraws it took and the outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankTrial {
    #[serde(rename = "R")]
    pub r: usize,
    pub retries: usize,
    pub full_rank: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankFailure {
    #[serde(rename = "R")]
    pub r: usize,
    /// `σᵢ / σ₁` for the smallest singular values of the last draw.
    pub tail: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmaxResult {
    pub coupling: Coupling,
    #[serde(rename = "I")]
    pub bins: usize,
    pub seed: u64,
    pub rel_tol: f64,
    pub mode: SampleMode,
    pub strategy: SearchStrategy,
    pub r_max: usize,
    /// One per `R` in `1..=r_max`, ascending.
    pub certificates: Vec<Certificate>,
    pub trials: Vec<RankTrial>,
    pub failure: Option<RankFailure>,
    pub necessary_bound: usize,
    pub defect_bound: Option<usize>,
    pub search_cap: usize,
    pub achieved: bool,
}

impl RmaxResult {
    pub fn certificate(&self, r: usize) -> Option<Certificate> {
        self.certificates.iter().copied().find(|c| c.r == r)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Jacobian at `sample_params(M, I, r, seed, mode)` in floating point.
pub fn jacobian_at(coupling: &Coupling, i: usize, r: usize, seed: u64, mode: SampleMode) -> Result<DMatrix<f64>> {
    let theta: ParamVector<f64> = sample_params(coupling.num_vars(), i, r, seed, mode)?.to_f64();
    Ok(param::jacobian(&theta, coupling)?.matrix)
}

/// Seed of redraw `attempt` (≥ 1) at rank `r`.
fn retry_seed(seed: u64, r: usize, attempt: usize) -> u64 {
    seed::mix(seed, ((r as u64) << 16) | attempt as u64)
}

struct Searcher<'a> {
    coupling: &'a Coupling,
    i: usize,
    seed: u64,
    opts: RmaxOptions,
    trials: Vec<RankTrial>,
    failure: Option<RankFailure>,
}

impl Searcher<'_> {
    /// Tests rank `r`, first at `first_seed`, then at fresh seeds. Returns
    /// the seed that achieved full column rank.
    fn test(&mut self, r: usize, first_seed: u64) -> Result<Option<u64>> {
        let rows = self.coupling.num_triplets() * self.i.pow(3);
        let cols = r * param::block_len(self.coupling.num_vars(), self.i);
        if cols > rows {
            self.trials.push(RankTrial {
                r,
                retries: 0,
                full_rank: false,
            });
            self.failure = Some(RankFailure { r, tail: Vec::new() });
            return Ok(None);
        }
        let mut report = None;
        for attempt in 0..=self.opts.retries_per_r {
            let s = if attempt == 0 {
                first_seed
            } else {
                retry_seed(self.seed, r, attempt)
            };
            let j = jacobian_at(self.coupling, self.i, r, s, self.opts.mode)?;
            let rep = numerical_rank(&j, self.opts.rel_tol)?;
            if rep.full_column_rank {
                self.trials.push(RankTrial {
                    r,
                    retries: attempt,
                    full_rank: true,
                });
                return Ok(Some(s));
            }
            report = Some(rep);
        }
        self.trials.push(RankTrial {
            r,
            retries: self.opts.retries_per_r,
            full_rank: false,
        });
        self.failure = Some(RankFailure {
            r,
            tail: report.map(|r| r.relative_tail()).unwrap_or_default(),
        });
        Ok(None)
    }
}

/// Largest `R ≤ min(necessary bound, r_cap)` whose Jacobian is full column
/// rank at a random draw, with up to `retries_per_r` redraws per rank.
pub fn rmax_search(coupling: &Coupling, i: usize, seed: u64, opts: RmaxOptions) -> Result<RmaxResult> {
    if i < 2 {
        return Err(Error::invalid("rank search needs I >= 2"));
    }
    if opts.r_cap == Some(0) {
        return Err(Error::ResourceExhausted("r_cap must be at least 1".into()));
    }
    let necessary = necessary_bound(coupling, i);
    let cap = opts.r_cap.map_or(necessary, |c| c.min(necessary));
    let mut s = Searcher {
        coupling,
        i,
        seed,
        opts,
        trials: Vec::new(),
        failure: None,
    };

    // Each entry: rank reached and the seed certifying it and all smaller ranks.
    let mut certified: Vec<(usize, u64)> = Vec::new();
    match opts.strategy {
        SearchStrategy::Incremental | SearchStrategy::CapFirst => {
            let mut current = seed;
            let mut top = cap;
            if opts.strategy == SearchStrategy::CapFirst {
                if let Some(ok) = s.test(cap, seed)? {
                    certified.push((cap, ok));
                    top = 0;
                } else {
                    top = cap - 1;
                }
            }
            for r in 1..=top {
                match s.test(r, current)? {
                    Some(ok) => {
                        current = ok;
                        certified.push((r, ok));
                    }
                    None => break,
                }
            }
        }
        SearchStrategy::Bisection => {
            // Invariant: ranks ≤ lo are certified, ranks ≥ hi have failed.
            let (mut lo, mut hi) = (0, cap + 1);
            let mut probe = cap;
            while lo + 1 < hi {
                match s.test(probe, seed)? {
                    Some(ok) => {
                        lo = probe;
                        certified.push((probe, ok));
                    }
                    None => hi = probe,
                }
                probe = lo + (hi - lo) / 2;
            }
            certified.sort_unstable();
        }
    }

    let r_max = certified.last().map_or(0, |&(r, _)| r);
    let mut certificates = Vec::with_capacity(r_max);
    let mut k = 0;
    for r in 1..=r_max {
        while certified[k].0 < r {
            k += 1;
        }
        certificates.push(Certificate { r, seed: certified[k].1 });
    }
    let failure = if r_max < cap { s.failure } else { None };
    Ok(RmaxResult {
        coupling: coupling.clone(),
        bins: i,
        seed,
        rel_tol: opts.rel_tol,
        mode: opts.mode,
        strategy: opts.strategy,
        r_max,
        certificates,
        trials: s.trials,
        failure,
        necessary_bound: necessary,
        defect_bound: defect_bound(&coupling.stats(), i),
        search_cap: cap,
        achieved: r_max == necessary,
    })
}

/// Whether the Jacobian rank at `R_big` generic terms equals `N_obs`.
pub fn rank_saturation_check(coupling: &Coupling, i: usize, r_big: usize, seed: u64) -> Result<bool> {
    let nb = necessary_bound(coupling, i);
    if r_big <= nb + 2 {
        return Err(Error::invalid(format!(
            "saturation check needs R_big > necessary bound + 2 = {}, got {r_big}",
            nb + 2
        )));
    }
    let j = jacobian_at(coupling, i, r_big, seed, SampleMode::Generic)?;
    Ok(numerical_rank(&j, DEFAULT_REL_TOL)?.rank == n_obs(coupling, i))
}

/// Recomputes the rank at a certificate, exactly when `exact` is set.
/// Exact mode uses the parameters' exact rational value, so floating-point
/// draws are checked at the very point the SVD saw.
pub fn verify_certificate(
    coupling: &Coupling,
    i: usize,
    cert: Certificate,
    mode: SampleMode,
    exact: bool,
    rel_tol: f64,
) -> Result<RankReport> {
    let params: Params = sample_params(coupling.num_vars(), i, cert.r, cert.seed, mode)?;
    if exact {
        let theta = params.to_rational()?;
        let rows = coupling.num_triplets() * i.pow(3);
        let entries = rows * theta.as_slice().len();
        if entries > exact::MAX_EXACT_ENTRIES {
            return Err(Error::ResourceExhausted(format!(
                "exact verification limited to {} entries, Jacobian has {entries}",
                exact::MAX_EXACT_ENTRIES
            )));
        }
        exact_rank_report(&param::jacobian(&theta, coupling)?.matrix)
    } else {
        numerical_rank(&param::jacobian(&params.to_f64(), coupling)?.matrix, rel_tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{make_double_deg1, make_full, make_random, make_single_deg1};
    use rand::Rng;

    #[test]
    fn rank_examples() {
        let id = DMatrix::<f64>::identity(5, 5);
        let rep = numerical_rank(&id, DEFAULT_REL_TOL).unwrap();
        assert_eq!(rep.rank, 5);
        assert!(rep.full_column_rank);

        let mut rng = seed::rng(3);
        let a: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let m = DMatrix::from_fn(6, 2, |r, c| a[r] * (c + 1) as f64);
        assert_eq!(numerical_rank(&m, DEFAULT_REL_TOL).unwrap().rank, 1);

        let z = DMatrix::<f64>::zeros(3, 2);
        assert_eq!(numerical_rank(&z, DEFAULT_REL_TOL).unwrap().rank, 0);
        assert!(numerical_rank(&DMatrix::from_element(2, 2, f64::NAN), 1e-10).is_err());
        assert!(numerical_rank(&id, 0.0).is_err());
    }

    #[test]
    fn duplicated_blocks_are_rank_deficient() {
        let c = make_full(4).unwrap();
        let p = sample_params(4, 3, 2, 5, SampleMode::Generic).unwrap().to_f64();
        let b0 = p.block(0).to_vec();
        let dup = ParamVector::from_blocks(4, 3, &[b0.clone(), b0]).unwrap();
        let j = param::jacobian(&dup, &c).unwrap().matrix;
        assert!(numerical_rank(&j, DEFAULT_REL_TOL).unwrap().rank < j.ncols());
    }

    #[test]
    fn degrees_of_freedom() {
        let full8 = make_full(8).unwrap();
        assert_eq!(n_obs(&full8, 4), 1789);
        assert_eq!(necessary_bound(&full8, 4), 71);
        let full4 = make_full(4).unwrap();
        assert_eq!(n_obs(&full4, 3), 65);
        assert_eq!(necessary_bound(&full4, 3), 7);
        let c = make_random(7, 9, 2).unwrap();
        let s = c.stats();
        assert_eq!(n_obs(&c, 2), 1 + 7 + s.pairs + s.t);
        assert!(necessary_bound(&c, 2) >= 1);
    }

    #[test]
    fn defect_bounds() {
        let s1 = make_single_deg1(6).unwrap().stats();
        let s2 = make_double_deg1(6).unwrap().stats();
        assert_eq!(defect_bound(&s1, 4), Some(16));
        assert_eq!(defect_bound(&s2, 4), Some(10));
        assert_eq!(defect_bound(&make_full(5).unwrap().stats(), 4), None);
    }

    #[test]
    fn full_m4_i3_reaches_necessary_bound() {
        let c = make_full(4).unwrap();
        for strategy in [SearchStrategy::Incremental, SearchStrategy::CapFirst, SearchStrategy::Bisection] {
            let opts = RmaxOptions {
                strategy,
                ..Default::default()
            };
            let res = rmax_search(&c, 3, 11, opts).unwrap();
            assert_eq!(res.r_max, 7);
            assert!(res.achieved);
            assert_eq!(res.certificates.len(), 7);
            assert!(res.failure.is_none());
        }
    }

    #[test]
    fn certificates_verify_and_prefixes_hold() {
        let c = make_double_deg1(5).unwrap();
        let res = rmax_search(&c, 3, 4, RmaxOptions::default()).unwrap();
        assert_eq!(res.r_max, 4);
        for cert in &res.certificates {
            let rep = verify_certificate(&c, 3, *cert, res.mode, false, res.rel_tol).unwrap();
            assert!(rep.full_column_rank, "R={}", cert.r);
        }
        let round = RmaxResult::from_json(&res.to_json()).unwrap();
        assert_eq!(round, res);
    }

    #[test]
    fn r_cap_limits_and_zero_cap_errors() {
        let c = make_full(4).unwrap();
        let opts = RmaxOptions {
            r_cap: Some(3),
            ..Default::default()
        };
        let res = rmax_search(&c, 3, 0, opts).unwrap();
        assert_eq!((res.r_max, res.search_cap, res.achieved), (3, 3, false));
        let zero = RmaxOptions {
            r_cap: Some(0),
            ..Default::default()
        };
        assert!(matches!(rmax_search(&c, 3, 0, zero), Err(Error::ResourceExhausted(_))));
    }

    #[test]
    fn saturation_small() {
        let c = make_full(4).unwrap();
        assert!(rank_saturation_check(&c, 3, 12, 1).unwrap());
        assert!(rank_saturation_check(&c, 3, 9, 1).is_err());
    }

    #[test]
    fn exact_verification_of_rational_certificate() {
        let c = make_full(4).unwrap();
        let opts = RmaxOptions {
            mode: SampleMode::Rational,
            ..Default::default()
        };
        let res = rmax_search(&c, 2, 7, opts).unwrap();
        let cert = res.certificate(res.r_max).unwrap();
        let exact = verify_certificate(&c, 2, cert, SampleMode::Rational, true, DEFAULT_REL_TOL).unwrap();
        assert!(exact.full_column_rank);
        assert_eq!(exact.method, RankMethod::ExactRational);
    }
}
