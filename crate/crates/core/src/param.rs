//! Truncated simplex parameterization of the coupled model and its Jacobian.
//!
//! A rank-`R` model is the vector `θ = (θ_1, …, θ_R)`, each block
//! `θ_r = (λ_r, ua_r^(1), …, ua_r^(M))` of length `n1 = 1 + M(I−1)`, where
//! `ua` holds the first `I−1` entries of a stochastic column. The lift
//! `𝒫(ua) = (ua, 1 − Σ ua)` restores the last entry. The marginal map sends
//! `θ` to the concatenation of `vec(𝓗^(τ))` over the coupling's triplets,
//! each an order-3 CPD of lifted columns.
//!
//! Everything here is generic over the scalar, so the same code produces
//! floating-point Jacobians for SVD rank tests and exact rational Jacobians
//! for certificates.

use nalgebra::DMatrix;
use num::Num;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::coupling::Coupling;
use crate::exact::{self, Rational};
use crate::seed;
use crate::{Error, Result};

/// Scalars the parameterization can be evaluated over.
pub trait Scalar: nalgebra::Scalar + Num {}

impl<T: nalgebra::Scalar + Num> Scalar for T {}

/// Length of one rank-one parameter block.
pub fn block_len(m: usize, i: usize) -> usize {
    1 + m * (i - 1)
}

/// `𝒫(ua) = (ua, 1 − Σ ua)`.
pub fn lift<T: Scalar>(ua: &[T]) -> Vec<T> {
    let last = ua.iter().fold(T::one(), |acc, x| acc - x.clone());
    let mut out = ua.to_vec();
    out.push(last);
    out
}

/// Drops the last entry of a stochastic column.
pub fn truncate<T: Clone>(a: &[T]) -> Vec<T> {
    a[..a.len().saturating_sub(1)].to_vec()
}

/// Entry `(p, k)` of the lift Jacobian `J_P` (`I × (I−1)`): identity on the
/// first `I−1` rows, `−1` across the last row.
pub fn lift_jacobian_entry<T: Scalar>(p: usize, k: usize, i: usize) -> T {
    if p == i - 1 {
        T::zero() - T::one()
    } else if p == k {
        T::one()
    } else {
        T::zero()
    }
}

/// The lift Jacobian `J_P` as a matrix.
pub fn lift_jacobian<T: Scalar>(i: usize) -> DMatrix<T> {
    DMatrix::from_fn(i, i - 1, |p, k| lift_jacobian_entry(p, k, i))
}

/// Parameter vector `θ` of a rank-`R` model with `M` variables and `I` bins.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector<T = f64> {
    m: usize,
    i: usize,
    r: usize,
    theta: Vec<T>,
}

impl<T: Scalar> ParamVector<T> {
    pub fn new(m: usize, i: usize, r: usize, theta: Vec<T>) -> Result<Self> {
        if m == 0 || i == 0 {
            return Err(Error::invalid("parameter vector needs M >= 1 and I >= 1"));
        }
        let want = r * block_len(m, i);
        if theta.len() != want {
            return Err(Error::invalid(format!(
                "theta has length {}, expected R(1+M(I-1)) = {want}",
                theta.len()
            )));
        }
        Ok(Self { m, i, r, theta })
    }

    /// Concatenates rank-one blocks.
    pub fn from_blocks(m: usize, i: usize, blocks: &[Vec<T>]) -> Result<Self> {
        let theta = blocks.iter().flatten().cloned().collect();
        Self::new(m, i, blocks.len(), theta)
    }

    pub fn num_vars(&self) -> usize {
        self.m
    }

    pub fn bins(&self) -> usize {
        self.i
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    pub fn block_len(&self) -> usize {
        block_len(self.m, self.i)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.theta
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.theta
    }

    pub fn block(&self, r: usize) -> &[T] {
        let n1 = self.block_len();
        &self.theta[r * n1..(r + 1) * n1]
    }

    pub fn lambda(&self, r: usize) -> &T {
        &self.block(r)[0]
    }

    /// Truncated column `ua_r^(var)`.
    pub fn truncated(&self, r: usize, var: usize) -> &[T] {
        let off = 1 + var * (self.i - 1);
        &self.block(r)[off..off + self.i - 1]
    }

    /// Lifted column `𝒫(ua_r^(var))`.
    pub fn lifted(&self, r: usize, var: usize) -> Vec<T> {
        lift(self.truncated(r, var))
    }

    /// The first `r` blocks.
    pub fn prefix(&self, r: usize) -> Result<Self> {
        if r > self.r {
            return Err(Error::invalid(format!("prefix of {r} blocks from a rank-{} vector", self.r)));
        }
        Self::new(self.m, self.i, r, self.theta[..r * self.block_len()].to_vec())
    }

    /// Reorders blocks: block `k` of the result is block `order[k]` of `self`.
    pub fn permute_blocks(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.r];
        if order.len() != self.r || order.iter().any(|&k| k >= self.r || std::mem::replace(&mut seen[k], true)) {
            return Err(Error::invalid("block order must be a permutation"));
        }
        let blocks: Vec<Vec<T>> = order.iter().map(|&k| self.block(k).to_vec()).collect();
        Self::from_blocks(self.m, self.i, &blocks)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> ParamVector<U> {
        ParamVector {
            m: self.m,
            i: self.i,
            r: self.r,
            theta: self.theta.iter().map(f).collect(),
        }
    }

    fn check_against(&self, coupling: &Coupling) -> Result<()> {
        if coupling.num_vars() != self.m {
            return Err(Error::invalid(format!(
                "coupling has M={} but theta has M={}",
                coupling.num_vars(),
                self.m
            )));
        }
        Ok(())
    }
}

impl<T: Scalar + PartialOrd> ParamVector<T> {
    /// `λ_r ≥ 0` and every truncated column is nonnegative with sum `≤ 1`.
    /// With `strict`, truncated entries must be positive with sum `< 1`.
    pub fn is_feasible(&self, strict: bool) -> bool {
        (0..self.r).all(|r| {
            *self.lambda(r) >= T::zero()
                && (0..self.m).all(|v| {
                    let ua = self.truncated(r, v);
                    let sum = ua.iter().fold(T::zero(), |a, x| a + x.clone());
                    if strict {
                        ua.iter().all(|x| *x > T::zero()) && sum < T::one()
                    } else {
                        ua.iter().all(|x| *x >= T::zero()) && sum <= T::one()
                    }
                })
        })
    }
}

impl ParamVector<Rational> {
    pub fn to_f64(&self) -> ParamVector<f64> {
        self.map(exact::to_f64)
    }
}

impl ParamVector<f64> {
    /// Exact rational value of every entry.
    pub fn to_rational(&self) -> Result<ParamVector<Rational>> {
        let theta = self.theta.iter().map(|&x| exact::from_f64(x)).collect::<Result<_>>()?;
        ParamVector::new(self.m, self.i, self.r, theta)
    }
}

/// Stacked marginals `y = (vec 𝓗^(τ_1), …, vec 𝓗^(τ_T))` in the coupling's
/// canonical triplet order.
#[derive(Debug, Clone)]
pub struct MarginalStack<T = f64> {
    pub coupling: Coupling,
    pub bins: usize,
    pub y: Vec<T>,
}

impl<T: Scalar> MarginalStack<T> {
    /// The `I³` entries of triplet `t`, column-major over the triplet's
    /// variables in ascending order.
    pub fn block(&self, t: usize) -> &[T] {
        let n = self.bins.pow(3);
        &self.y[t * n..(t + 1) * n]
    }
}

/// The marginal map `θ ↦ y`.
pub fn mu<T: Scalar>(theta: &ParamVector<T>, coupling: &Coupling) -> Result<MarginalStack<T>> {
    theta.check_against(coupling)?;
    let i = theta.bins();
    let i3 = i * i * i;
    let mut y = vec![T::zero(); coupling.num_triplets() * i3];
    for r in 0..theta.rank() {
        let lam = theta.lambda(r).clone();
        let lifted: Vec<Vec<T>> = (0..theta.num_vars()).map(|v| theta.lifted(r, v)).collect();
        for (t, trip) in coupling.triplets().iter().enumerate() {
            let (a, b, c) = (&lifted[trip[0]], &lifted[trip[1]], &lifted[trip[2]]);
            let block = &mut y[t * i3..(t + 1) * i3];
            for s in 0..i {
                let lc = lam.clone() * c[s].clone();
                for q in 0..i {
                    let lbc = lc.clone() * b[q].clone();
                    for p in 0..i {
                        let e = &mut block[p + i * q + i * i * s];
                        *e = e.clone() + lbc.clone() * a[p].clone();
                    }
                }
            }
        }
    }
    Ok(MarginalStack {
        coupling: coupling.clone(),
        bins: i,
        y,
    })
}

/// Dense Jacobian of the marginal map: `T·I³` rows (row blocks by triplet),
/// `R·n1` columns (column blocks by rank-one term).
#[derive(Debug, Clone)]
pub struct JacobianMatrix<T = f64> {
    pub matrix: DMatrix<T>,
    pub num_triplets: usize,
    pub bins: usize,
    pub block_len: usize,
}

impl<T: Scalar> JacobianMatrix<T> {
    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    /// Column index of `∂/∂λ_r`.
    pub fn lambda_column(&self, r: usize) -> usize {
        r * self.block_len
    }

    /// Column index of `∂/∂ua_r^(var)[k]`.
    pub fn factor_column(&self, r: usize, var: usize, k: usize) -> usize {
        r * self.block_len + 1 + var * (self.bins - 1) + k
    }
}

/// Analytic Jacobian of [`mu`].
///
/// For triplet `{j,k,ℓ}` with lifted columns `a, b, c` of term `r`:
/// the `λ_r` column is `c ⊗ b ⊗ a`, and the factor blocks are
/// `λ_r (c ⊗ b ⊗ J_P)`, `λ_r (c ⊗ J_P ⊗ a)`, `λ_r (J_P ⊗ b ⊗ a)` for
/// `ua^(j)`, `ua^(k)`, `ua^(ℓ)`; every other factor block is zero.
pub fn jacobian<T: Scalar>(theta: &ParamVector<T>, coupling: &Coupling) -> Result<JacobianMatrix<T>> {
    theta.check_against(coupling)?;
    let i = theta.bins();
    if i < 2 {
        return Err(Error::invalid("Jacobian needs I >= 2"));
    }
    let i3 = i * i * i;
    let n1 = theta.block_len();
    let nt = coupling.num_triplets();
    let mut jac = DMatrix::from_element(nt * i3, theta.rank() * n1, T::zero());
    let minus = |x: T| T::zero() - x;

    for r in 0..theta.rank() {
        let lam = theta.lambda(r).clone();
        let lifted: Vec<Vec<T>> = (0..theta.num_vars()).map(|v| theta.lifted(r, v)).collect();
        let col0 = r * n1;
        let fcol = |var: usize| col0 + 1 + var * (i - 1);
        for (t, trip) in coupling.triplets().iter().enumerate() {
            let row0 = t * i3;
            let (a, b, c) = (&lifted[trip[0]], &lifted[trip[1]], &lifted[trip[2]]);
            let (cj, ck, cl) = (fcol(trip[0]), fcol(trip[1]), fcol(trip[2]));
            for s in 0..i {
                for q in 0..i {
                    let bc = b[q].clone() * c[s].clone();
                    let lbc = lam.clone() * bc.clone();
                    for p in 0..i {
                        let row = row0 + p + i * q + i * i * s;
                        jac[(row, col0)] = a[p].clone() * bc.clone();

                        // d/d ua^(j): λ J_P[p,·] b_q c_s
                        set_lift_row(&mut jac, row, cj, p, i, lbc.clone(), minus);
                        // d/d ua^(k): λ a_p J_P[q,·] c_s
                        let lac = lam.clone() * a[p].clone() * c[s].clone();
                        set_lift_row(&mut jac, row, ck, q, i, lac, minus);
                        // d/d ua^(ℓ): λ a_p b_q J_P[s,·]
                        let lab = lam.clone() * a[p].clone() * b[q].clone();
                        set_lift_row(&mut jac, row, cl, s, i, lab, minus);
                    }
                }
            }
        }
    }
    Ok(JacobianMatrix {
        matrix: jac,
        num_triplets: nt,
        bins: i,
        block_len: n1,
    })
}

/// Writes `scale · J_P[idx, ·]` into `jac[row, col0 .. col0 + I − 1]`.
#[inline]
fn set_lift_row<T: Scalar>(
    jac: &mut DMatrix<T>,
    row: usize,
    col0: usize,
    idx: usize,
    i: usize,
    scale: T,
    minus: impl Fn(T) -> T,
) {
    if idx + 1 < i {
        jac[(row, col0 + idx)] = scale;
    } else {
        let neg = minus(scale);
        for k in 0..i - 1 {
            jac[(row, col0 + k)] = neg.clone();
        }
    }
}

/// How random parameters are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    /// `λ ~ U[0.5, 1.5]`, lifted columns from the flat Dirichlet.
    #[default]
    Generic,
    /// `λ = p/32` with `p ∈ 16..=48`; lifted columns are random compositions
    /// of 64 into `I` positive parts, divided by 64.
    Rational,
}

impl SampleMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleMode::Generic => "generic",
            SampleMode::Rational => "rational",
        }
    }
}

/// Denominator of rational-mode factor entries.
pub const RATIONAL_GRID: u32 = 64;

/// A sampled parameter vector in either mode.
#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Generic(ParamVector<f64>),
    Rational(ParamVector<Rational>),
}

impl Params {
    pub fn mode(&self) -> SampleMode {
        match self {
            Params::Generic(_) => SampleMode::Generic,
            Params::Rational(_) => SampleMode::Rational,
        }
    }

    pub fn to_f64(&self) -> ParamVector<f64> {
        match self {
            Params::Generic(p) => p.clone(),
            Params::Rational(p) => p.to_f64(),
        }
    }

    /// Exact value of the parameters (floats are converted exactly).
    pub fn to_rational(&self) -> Result<ParamVector<Rational>> {
        match self {
            Params::Generic(p) => p.to_rational(),
            Params::Rational(p) => Ok(p.clone()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ParamFile::from(self)).expect("params serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: ParamFile = serde_json::from_str(s)?;
        file.try_into()
    }
}

/// Samples `R` blocks. Block `r` depends only on `(seed, r)`, so the first
/// `R'` blocks of a rank-`R` draw equal the rank-`R'` draw.
pub fn sample_params(m: usize, i: usize, r: usize, seed: u64, mode: SampleMode) -> Result<Params> {
    if r == 0 {
        return Err(Error::invalid("sample_params needs R >= 1"));
    }
    if i < 2 {
        return Err(Error::invalid("sample_params needs I >= 2"));
    }
    match mode {
        SampleMode::Generic => {
            let blocks: Vec<Vec<f64>> = (0..r).map(|k| generic_block(m, i, seed::mix(seed, k as u64))).collect();
            Ok(Params::Generic(ParamVector::from_blocks(m, i, &blocks)?))
        }
        SampleMode::Rational => {
            if i > RATIONAL_GRID as usize {
                return Err(Error::invalid(format!("rational sampling supports I <= {RATIONAL_GRID}")));
            }
            let blocks: Vec<Vec<Rational>> =
                (0..r).map(|k| rational_block(m, i, seed::mix(seed, k as u64))).collect();
            Ok(Params::Rational(ParamVector::from_blocks(m, i, &blocks)?))
        }
    }
}

fn generic_block(m: usize, i: usize, seed: u64) -> Vec<f64> {
    let mut rng = seed::rng(seed);
    let mut block = Vec::with_capacity(block_len(m, i));
    block.push(rng.random_range(0.5..1.5));
    for _ in 0..m {
        // Flat Dirichlet: normalized unit exponentials.
        let e: Vec<f64> = (0..i).map(|_| Exp1.sample(&mut rng)).collect();
        let total: f64 = e.iter().sum();
        block.extend(e[..i - 1].iter().map(|x| x / total));
    }
    block
}

fn rational_block(m: usize, i: usize, seed: u64) -> Vec<Rational> {
    let mut rng = seed::rng(seed);
    let grid = RATIONAL_GRID as i64;
    let mut block = Vec::with_capacity(block_len(m, i));
    block.push(exact::rational(rng.random_range(16..=48), 32));
    for _ in 0..m {
        // I−1 distinct cut points in 1..grid split 0..grid into I positive parts.
        let mut cuts: Vec<i64> = rand::seq::index::sample(&mut rng, (grid - 1) as usize, i - 1)
            .into_iter()
            .map(|c| c as i64 + 1)
            .collect();
        cuts.sort_unstable();
        let mut prev = 0;
        for c in cuts {
            block.push(exact::rational(c - prev, grid));
            prev = c;
        }
    }
    block
}

/// On-disk form: `{"M", "I", "R", "mode": "generic"|"rational", "theta": [...]}`.
/// Rational entries are `"p/q"` strings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamFile {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "I")]
    pub i: usize,
    #[serde(rename = "R")]
    pub r: usize,
    pub mode: SampleMode,
    pub theta: Vec<serde_json::Value>,
}

impl From<&Params> for ParamFile {
    fn from(p: &Params) -> Self {
        let (m, i, r, theta) = match p {
            Params::Generic(v) => (v.m, v.i, v.r, v.theta.iter().map(|&x| serde_json::json!(x)).collect()),
            Params::Rational(v) => (
                v.m,
                v.i,
                v.r,
                v.theta.iter().map(|x| serde_json::Value::String(exact::format(x))).collect(),
            ),
        };
        ParamFile {
            m,
            i,
            r,
            mode: p.mode(),
            theta,
        }
    }
}

impl TryFrom<ParamFile> for Params {
    type Error = Error;

    fn try_from(f: ParamFile) -> Result<Self> {
        match f.mode {
            SampleMode::Generic => {
                let theta = f
                    .theta
                    .iter()
                    .map(|v| v.as_f64().ok_or_else(|| Error::invalid(format!("theta entry {v} is not a number"))))
                    .collect::<Result<Vec<f64>>>()?;
                Ok(Params::Generic(ParamVector::new(f.m, f.i, f.r, theta)?))
            }
            SampleMode::Rational => {
                let theta = f
                    .theta
                    .iter()
                    .map(|v| match v {
                        serde_json::Value::String(s) => exact::parse(s),
                        serde_json::Value::Number(n) if n.is_i64() => Ok(exact::rational(n.as_i64().unwrap(), 1)),
                        other => Err(Error::invalid(format!("theta entry {other} is not a rational"))),
                    })
                    .collect::<Result<Vec<Rational>>>()?;
                Ok(Params::Rational(ParamVector::new(f.m, f.i, f.r, theta)?))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{make_full, Coupling};
    use num::Zero;

    fn generic(m: usize, i: usize, r: usize, seed: u64) -> ParamVector<f64> {
        match sample_params(m, i, r, seed, SampleMode::Generic).unwrap() {
            Params::Generic(p) => p,
            _ => unreachable!(),
        }
    }

    #[test]
    fn lift_examples() {
        assert_eq!(lift::<f64>(&[]), vec![1.0]);
        let l = lift(&[0.2_f64, 0.3]);
        assert_eq!(l[..2], [0.2, 0.3]);
        assert!((l[2] - 0.5).abs() < 1e-15);
        let ua = [0.125, 0.25, 0.0625];
        assert_eq!(truncate(&lift(&ua)), ua.to_vec());
    }

    #[test]
    fn lift_jacobian_structure() {
        for i in 2..6 {
            let jp = lift_jacobian::<f64>(i);
            for k in 0..i - 1 {
                assert_eq!(jp.column(k).sum(), 0.0);
                for p in 0..i - 1 {
                    assert_eq!(jp[(p, k)], if p == k { 1.0 } else { 0.0 });
                }
            }
        }
    }

    #[test]
    fn unit_model_marginals() {
        let c = make_full(4).unwrap();
        let (m, i) = (4, 3);
        let mut theta = vec![0.0; block_len(m, i)];
        theta[0] = 1.0;
        let p = ParamVector::new(m, i, 1, theta).unwrap();
        let y = mu(&p, &c).unwrap();
        for t in 0..c.num_triplets() {
            let b = y.block(t);
            assert_eq!(b[26], 1.0);
            assert_eq!(b.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn permutation_invariance() {
        let c = make_full(5).unwrap();
        let p = generic(5, 3, 3, 17);
        let q = p.permute_blocks(&[2, 0, 1]).unwrap();
        let (y1, y2) = (mu(&p, &c).unwrap().y, mu(&q, &c).unwrap().y);
        for (a, b) in y1.iter().zip(&y2) {
            assert!((a - b).abs() <= 1e-14);
        }
        assert!(p.permute_blocks(&[0, 0, 1]).is_err());
    }

    #[test]
    fn zero_weight_kills_factor_columns() {
        let c = make_full(4).unwrap();
        let mut p = generic(4, 3, 2, 5);
        let n1 = p.block_len();
        p.as_mut_slice()[n1] = 0.0;
        let j = jacobian(&p, &c).unwrap();
        assert!(j.matrix.column(j.lambda_column(1)).iter().any(|&x| x != 0.0));
        for col in n1 + 1..2 * n1 {
            assert!(j.matrix.column(col).iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn dimension_checks() {
        let c = make_full(5).unwrap();
        let p = generic(4, 3, 1, 0);
        assert!(mu(&p, &c).is_err());
        assert!(jacobian(&p, &c).is_err());
        assert!(ParamVector::new(4, 3, 2, vec![0.0; 5]).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_feasible() {
        assert_eq!(generic(4, 3, 2, 9), generic(4, 3, 2, 9));
        assert_eq!(generic(4, 3, 5, 9).prefix(2).unwrap(), generic(4, 3, 2, 9));
        for s in 0..1000 {
            assert!(generic(4, 3, 2, s).is_feasible(true));
        }
        let Params::Rational(r) = sample_params(5, 4, 3, 1, SampleMode::Rational).unwrap() else {
            unreachable!()
        };
        assert!(r.is_feasible(true));
        for x in r.as_slice() {
            assert!(*x.denom() <= num::BigInt::from(64));
            assert!(*x.numer() <= num::BigInt::from(64));
        }
    }

    #[test]
    fn params_json_round_trip() {
        for mode in [SampleMode::Generic, SampleMode::Rational] {
            let p = sample_params(4, 3, 2, 3, mode).unwrap();
            let js = p.to_json();
            assert_eq!(Params::from_json(&js).unwrap(), p);
        }
        let js = r#"{"M":4,"I":2,"R":1,"mode":"rational","theta":["1","1/2","1/3","1/4","1/5"]}"#;
        assert!(Params::from_json(js).is_ok());
        let bad = r#"{"M":4,"I":2,"R":1,"mode":"rational","theta":["1","x","1/3","1/4","1/5"]}"#;
        assert!(Params::from_json(bad).is_err());
    }

    #[test]
    fn jacobian_matches_central_differences() {
        for (m, i, r, seed) in [(4, 2, 3, 1), (4, 3, 2, 2), (5, 4, 3, 3), (6, 3, 4, 4)] {
            let c = crate::coupling::make_random(m, (m * (m - 1) * (m - 2) / 6).min(6), seed).unwrap();
            let p = generic(m, i, r, seed);
            let j = jacobian(&p, &c).unwrap().matrix;
            let h = 1e-6;
            for col in 0..p.as_slice().len() {
                let (mut plus, mut minus) = (p.clone(), p.clone());
                plus.as_mut_slice()[col] += h;
                minus.as_mut_slice()[col] -= h;
                let (yp, ym) = (mu(&plus, &c).unwrap().y, mu(&minus, &c).unwrap().y);
                for row in 0..yp.len() {
                    let fd = (yp[row] - ym[row]) / (2.0 * h);
                    assert!((fd - j[(row, col)]).abs() < 1e-5, "M={m} I={i} row={row} col={col}");
                }
            }
        }
    }

    #[test]
    fn rational_jacobian_matches_float() {
        let c = make_full(4).unwrap();
        let Params::Rational(p) = sample_params(4, 3, 2, 8, SampleMode::Rational).unwrap() else {
            unreachable!()
        };
        let je = jacobian(&p, &c).unwrap().matrix;
        let jf = jacobian(&p.to_f64(), &c).unwrap().matrix;
        for (a, b) in je.iter().zip(jf.iter()) {
            assert!((exact::to_f64(a) - b).abs() < 1e-14);
        }
        let ye = mu(&p, &c).unwrap();
        for t in 0..c.num_triplets() {
            let total = ye.block(t).iter().fold(Rational::zero(), |a, x| a + x);
            let lam = (0..2).fold(Rational::zero(), |a, r| a + p.lambda(r));
            assert_eq!(total, lam);
        }
    }

    #[test]
    fn jacobian_sparsity_follows_incidence() {
        // M=4, triplets {1,3,4} and {2,3,4}.
        let c = Coupling::new(4, [[0, 2, 3], [1, 2, 3]]).unwrap();
        let p = generic(4, 3, 2, 23);
        let j = jacobian(&p, &c).unwrap();
        let v = c.incidence();
        let i3 = 27;
        for r in 0..2 {
            for t in 0..2 {
                for var in 0..4 {
                    let nonzero = (0..2).any(|k| {
                        let col = j.factor_column(r, var, k);
                        (t * i3..(t + 1) * i3).any(|row| j.matrix[(row, col)] != 0.0)
                    });
                    assert_eq!(nonzero, v.get(t, var) == 1, "r={r} t={t} var={var}");
                }
            }
        }
    }
}
