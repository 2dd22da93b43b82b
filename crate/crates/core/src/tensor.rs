//! Dense tensors in column-major layout.
//!
//! Entry `(i_1, …, i_N)` (0-based) lives at offset
//! `i_1 + I_1 i_2 + I_1 I_2 i_3 + …`, so the vectorization of an outer product
//! `a ∘ b ∘ c` equals the Kronecker product `c ⊗ b ⊗ a`. Every Kronecker
//! ordering elsewhere in the crate follows from this convention.

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Upper bound on the number of entries of a tensor built by [`cpd_eval`].
pub const MAX_DENSE_ENTRIES: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::invalid(format!("tensor dims must be non-empty and positive, got {dims:?}")));
        }
        let len: usize = dims.iter().product();
        if len != data.len() {
            return Err(Error::invalid(format!(
                "data length {} does not match dims {dims:?}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let len = checked_len(&dims)?;
        Self::new(dims, vec![0.0; len])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    /// Column-major vectorization.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.dims.len());
        let mut off = 0;
        let mut stride = 1;
        for (&i, &d) in index.iter().zip(&self.dims) {
            debug_assert!(i < d);
            off += i * stride;
            stride *= d;
        }
        off
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let off = self.offset(index);
        self.data[off] = value;
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max_abs_diff(&self, other: &DenseTensor) -> f64 {
        assert_eq!(self.dims, other.dims, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn checked_len(dims: &[usize]) -> Result<usize> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .filter(|&n| n <= MAX_DENSE_ENTRIES)
        .ok_or_else(|| {
            Error::ResourceExhausted(format!(
                "tensor with dims {dims:?} exceeds the dense budget of {MAX_DENSE_ENTRIES} entries"
            ))
        })
}

/// Rank-one tensor `v_1 ∘ v_2 ∘ … ∘ v_N`.
pub fn outer_product(vectors: &[&[f64]]) -> Result<DenseTensor> {
    if vectors.is_empty() {
        return Err(Error::invalid("outer product of an empty vector list"));
    }
    if vectors.iter().any(|v| v.is_empty()) {
        return Err(Error::invalid("outer product with an empty vector"));
    }
    let dims: Vec<usize> = vectors.iter().map(|v| v.len()).collect();
    checked_len(&dims)?;
    // vec(v_1 ∘ … ∘ v_N) = v_N ⊗ … ⊗ v_1
    let reversed: Vec<&[f64]> = vectors.iter().rev().copied().collect();
    let data = kron_vecs(&reversed);
    DenseTensor::new(dims, data)
}

/// Whether a factor model must satisfy the full simplex constraints
/// (weights summing to one) or only the relaxed ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplexMode {
    Strict,
    Relaxed,
}

/// Rank-`R` CP model with simplex constraints: nonnegative weights and `M`
/// column-stochastic `I × R` factor matrices.
#[derive(Debug, Clone)]
pub struct FactorModel {
    lambda: Vec<f64>,
    factors: Vec<DMatrix<f64>>,
}

const SIMPLEX_TOL: f64 = 1e-12;

impl FactorModel {
    pub fn new(lambda: Vec<f64>, factors: Vec<DMatrix<f64>>, mode: SimplexMode) -> Result<Self> {
        let r = lambda.len();
        if r == 0 || factors.is_empty() {
            return Err(Error::invalid("factor model needs R >= 1 and M >= 1"));
        }
        let i = factors[0].nrows();
        for (m, a) in factors.iter().enumerate() {
            if a.nrows() != i || a.ncols() != r {
                return Err(Error::invalid(format!(
                    "factor {m} has shape {}x{}, expected {i}x{r}",
                    a.nrows(),
                    a.ncols()
                )));
            }
            if a.iter().any(|&x| !(x >= 0.0)) {
                return Err(Error::invalid(format!("factor {m} has negative or NaN entries")));
            }
            for (c, col) in a.column_iter().enumerate() {
                let s: f64 = col.sum();
                if (s - 1.0).abs() > SIMPLEX_TOL {
                    return Err(Error::invalid(format!("column {c} of factor {m} sums to {s}, not 1")));
                }
            }
        }
        if lambda.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::invalid("weights must be nonnegative"));
        }
        if mode == SimplexMode::Strict {
            let s: f64 = lambda.iter().sum();
            if (s - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::invalid(format!("strict model weights sum to {s}, not 1")));
            }
        }
        Ok(Self { lambda, factors })
    }

    pub fn num_vars(&self) -> usize {
        self.factors.len()
    }

    pub fn bins(&self) -> usize {
        self.factors[0].nrows()
    }

    pub fn rank(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn factor(&self, m: usize) -> &DMatrix<f64> {
        &self.factors[m]
    }
}

/// `Σ_r λ_r ∘_{m ∈ modes} A^(m)[:, r]` over the selected (0-based) modes, in
/// the given order.
pub fn cpd_eval(model: &FactorModel, modes: &[usize]) -> Result<DenseTensor> {
    if modes.is_empty() {
        return Err(Error::invalid("cpd_eval needs at least one mode"));
    }
    let m = model.num_vars();
    for (k, &mode) in modes.iter().enumerate() {
        if mode >= m {
            return Err(Error::invalid(format!("mode {mode} out of range for M={m}")));
        }
        if modes[..k].contains(&mode) {
            return Err(Error::invalid(format!("mode {mode} repeated")));
        }
    }
    let dims: Vec<usize> = modes.iter().map(|&md| model.factor(md).nrows()).collect();
    let mut out = DenseTensor::zeros(dims)?;
    for r in 0..model.rank() {
        let cols: Vec<Vec<f64>> = modes
            .iter()
            .map(|&md| model.factor(md).column(r).iter().copied().collect())
            .collect();
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let term = outer_product(&refs)?;
        let w = model.lambda()[r];
        for (o, t) in out.data.iter_mut().zip(term.data()) {
            *o += w * t;
        }
    }
    Ok(out)
}

/// Sums `t` over every mode not in `keep`. Kept modes appear in ascending
/// order in the result.
pub fn marginalize(t: &DenseTensor, keep: &[usize]) -> Result<DenseTensor> {
    if keep.is_empty() {
        return Err(Error::invalid("marginalize needs a non-empty set of kept modes"));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() {
        return Err(Error::invalid("repeated mode in kept set"));
    }
    if let Some(&bad) = kept.iter().find(|&&k| k >= t.order()) {
        return Err(Error::invalid(format!("mode {bad} out of range for order {}", t.order())));
    }
    let out_dims: Vec<usize> = kept.iter().map(|&k| t.dims[k]).collect();
    let mut out = DenseTensor::zeros(out_dims.clone())?;

    // Stride of each kept mode inside the output.
    let mut out_stride = vec![0usize; t.order()];
    let mut s = 1;
    for (&k, &d) in kept.iter().zip(&out_dims) {
        out_stride[k] = s;
        s *= d;
    }
    let mut idx = vec![0usize; t.order()];
    for &x in &t.data {
        let off: usize = idx.iter().zip(&out_stride).map(|(i, s)| i * s).sum();
        out.data[off] += x;
        // Advance the column-major multi-index.
        for (i, &d) in idx.iter_mut().zip(&t.dims) {
            *i += 1;
            if *i < d {
                break;
            }
            *i = 0;
        }
    }
    Ok(out)
}

/// Kronecker product: `(a ⊗ b)[i p + k, j q + l] = a[i, j] b[k, l]` for `b`
/// of size `p × q`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (p, q) = b.shape();
    DMatrix::from_fn(a.nrows() * p, a.ncols() * q, |row, col| {
        a[(row / p, col / q)] * b[(row % p, col % q)]
    })
}

/// Kronecker product of column vectors, `x_1 ⊗ x_2 ⊗ …`.
pub fn kron_vecs(vs: &[&[f64]]) -> Vec<f64> {
    vs.iter().fold(vec![1.0], |acc, v| {
        acc.iter()
            .flat_map(|&a| v.iter().map(move |&b| a * b))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn random_stochastic(rng: &mut impl Rng, i: usize, r: usize) -> DMatrix<f64> {
        let mut a = DMatrix::from_fn(i, r, |_, _| rng.random::<f64>() + 0.01);
        for mut c in a.column_iter_mut() {
            let s = c.sum();
            c /= s;
        }
        a
    }

    #[test]
    fn basis_outer_product() {
        let t = outer_product(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        assert_eq!(t.dims(), &[2, 2]);
        assert_eq!(t.get(&[0, 1]), 1.0);
        assert_eq!(t.sum(), 1.0);

        let e1 = [1.0, 0.0];
        let t = outer_product(&[&e1, &e1, &e1]).unwrap();
        assert_eq!(t.get(&[0, 0, 0]), 1.0);
        assert_eq!(t.sum(), 1.0);
    }

    #[test]
    fn outer_product_matches_triple_loop_and_kron() {
        let mut rng = crate::seed::rng(7);
        let v: Vec<Vec<f64>> = (0..3).map(|_| (0..3).map(|_| rng.random()).collect()).collect();
        let t = outer_product(&[&v[0], &v[1], &v[2]]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let want = v[0][i] * v[1][j] * v[2][k];
                    assert!((t.get(&[i, j, k]) - want).abs() <= 1e-15 * want);
                }
            }
        }
        // vec(a∘b∘c) = c ⊗ b ⊗ a, bit-identical (same multiplication order).
        assert_eq!(t.data(), kron_vecs(&[&v[2], &v[1], &v[0]]).as_slice());
        let k = kron(
            &DMatrix::from_column_slice(3, 1, &v[2]),
            &kron(&DMatrix::from_column_slice(3, 1, &v[1]), &DMatrix::from_column_slice(3, 1, &v[0])),
        );
        for (x, y) in t.data().iter().zip(k.iter()) {
            assert!((x - y).abs() <= 1e-15 * y.abs());
        }
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(matches!(outer_product(&[]), Err(Error::InvalidArgument(_))));
        assert!(matches!(outer_product(&[&[]]), Err(Error::InvalidArgument(_))));
        let t = DenseTensor::zeros(vec![2, 2]).unwrap();
        assert!(matches!(marginalize(&t, &[]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn marginalize_uniform_mass() {
        let t = DenseTensor::new(vec![2, 2, 2], vec![1.0; 8]).unwrap();
        let m = marginalize(&t, &[0]).unwrap();
        assert_eq!(m.data(), &[4.0, 4.0]);
        assert_eq!(marginalize(&t, &[0, 1, 2]).unwrap(), t);
    }

    #[test]
    fn cpd_eval_basics() {
        let e = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let model = FactorModel::new(vec![1.0], vec![e.clone(), e.clone(), e], SimplexMode::Strict).unwrap();
        let t = cpd_eval(&model, &[0, 1, 2]).unwrap();
        assert_eq!(t.get(&[0, 0, 0]), 1.0);
        assert_eq!(t.sum(), 1.0);
        assert!(cpd_eval(&model, &[0, 0]).is_err());
        assert!(cpd_eval(&model, &[3]).is_err());
    }

    #[test]
    fn collinear_terms_merge() {
        let mut rng = crate::seed::rng(3);
        let a: Vec<DMatrix<f64>> = (0..3).map(|_| random_stochastic(&mut rng, 3, 1)).collect();
        let doubled: Vec<DMatrix<f64>> = a.iter().map(|m| DMatrix::from_fn(3, 2, |i, _| m[(i, 0)])).collect();
        let one = FactorModel::new(vec![1.0], a, SimplexMode::Strict).unwrap();
        let two = FactorModel::new(vec![0.5, 0.5], doubled, SimplexMode::Strict).unwrap();
        let t1 = cpd_eval(&one, &[0, 1, 2]).unwrap();
        let t2 = cpd_eval(&two, &[0, 1, 2]).unwrap();
        assert!(t1.max_abs_diff(&t2) < 1e-15);
    }

    #[test]
    fn triplet_marginal_equals_triplet_cpd() {
        let mut rng = crate::seed::rng(11);
        let (m, i, r) = (5, 2, 3);
        let factors: Vec<DMatrix<f64>> = (0..m).map(|_| random_stochastic(&mut rng, i, r)).collect();
        let model = FactorModel::new(vec![0.2, 0.3, 0.5], factors, SimplexMode::Strict).unwrap();
        let full = cpd_eval(&model, &(0..m).collect::<Vec<_>>()).unwrap();
        let marg = marginalize(&full, &[0, 2, 3]).unwrap();
        let direct = cpd_eval(&model, &[0, 2, 3]).unwrap();
        assert!(marg.max_abs_diff(&direct) < 1e-12);
        assert_relative_eq!(marg.sum(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn kron_examples() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        assert_eq!(kron(&i2, &i2), DMatrix::<f64>::identity(4, 4));
        let a = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        let b = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        assert_eq!(kron(&a, &b), DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]));
    }

    #[test]
    fn kron_matches_element_loop() {
        let mut rng = crate::seed::rng(5);
        let a = DMatrix::from_fn(2, 2, |_, _| rng.random::<f64>());
        let b = DMatrix::from_fn(2, 2, |_, _| rng.random::<f64>());
        let k = kron(&a, &b);
        for i in 0..2 {
            for j in 0..2 {
                for p in 0..2 {
                    for q in 0..2 {
                        assert_eq!(k[(i * 2 + p, j * 2 + q)], a[(i, j)] * b[(p, q)]);
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_non_stochastic_factors() {
        let bad = DMatrix::from_column_slice(2, 1, &[0.6, 0.6]);
        assert!(FactorModel::new(vec![1.0], vec![bad], SimplexMode::Relaxed).is_err());
        let ok = DMatrix::from_column_slice(2, 1, &[0.4, 0.6]);
        assert!(FactorModel::new(vec![2.0], vec![ok.clone()], SimplexMode::Relaxed).is_ok());
        assert!(FactorModel::new(vec![2.0], vec![ok], SimplexMode::Strict).is_err());
    }

    #[test]
    fn dense_budget_guard() {
        assert!(matches!(DenseTensor::zeros(vec![2; 25]), Err(Error::ResourceExhausted(_))));
    }
}
