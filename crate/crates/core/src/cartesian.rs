//! Cartesian couplings `𝒯 = 𝓜₁ × 𝓜₂ × 𝓜₃` and their stacked order-3 view.
//!
//! All marginals of a Cartesian coupling tile a single tensor `𝓨` of size
//! `I·M₁ × I·M₂ × I·M₃` whose CPD has the stacked lifted factors `B⁽ⁱ⁾` as
//! factor matrices. Each `B⁽ⁱ⁾ = Qᵢ C⁽ⁱ⁾` for a constant `Qᵢ` of full column
//! rank, so identifiability of `𝓨` reduces to a tensor with mode sizes
//! `(I−1)Mᵢ + 1`.

use nalgebra::DMatrix;

use crate::bounds;
use crate::coupling::{make_cartesian, Partition};
use crate::param::{self, lift_jacobian_entry, ParamVector, Scalar};
use crate::tensor::{outer_product, DenseTensor};
use crate::{Error, Result};

/// Stacked marginals; block `(r, s, t)` is the marginal of
/// `(𝓜₁[r], 𝓜₂[s], 𝓜₃[t])` with modes in partition order.
#[derive(Debug, Clone)]
pub struct StackedTensor {
    pub partition: Partition,
    pub bins: usize,
    pub tensor: DenseTensor,
}

impl StackedTensor {
    /// The `I × I × I` block at set positions `(r, s, t)`.
    pub fn block(&self, r: usize, s: usize, t: usize) -> DenseTensor {
        let i = self.bins;
        let mut out = DenseTensor::zeros(vec![i, i, i]).expect("block fits");
        for c in 0..i {
            for b in 0..i {
                for a in 0..i {
                    let v = self.tensor.get(&[r * i + a, s * i + b, t * i + c]);
                    out.set(&[a, b, c], v);
                }
            }
        }
        out
    }
}

fn check_partition<T: Scalar>(theta: &ParamVector<T>, p: &Partition) -> Result<()> {
    if p.num_vars() != theta.num_vars() {
        return Err(Error::invalid(format!(
            "partition covers {} variables, theta has M={}",
            p.num_vars(),
            theta.num_vars()
        )));
    }
    Ok(())
}

/// Assembles `𝓨` block by block from the triplet marginals.
pub fn stack(theta: &ParamVector<f64>, p: &Partition) -> Result<StackedTensor> {
    check_partition(theta, p)?;
    let coupling = make_cartesian(p)?;
    let y = param::mu(theta, &coupling)?;
    let i = theta.bins();
    let [s1, s2, s3] = p.sets();
    let mut tensor = DenseTensor::zeros(vec![i * s1.len(), i * s2.len(), i * s3.len()])?;
    for (r, &j) in s1.iter().enumerate() {
        for (s, &k) in s2.iter().enumerate() {
            for (t, &l) in s3.iter().enumerate() {
                let mut sorted = [j, k, l];
                sorted.sort_unstable();
                let idx = coupling
                    .triplets()
                    .binary_search(&sorted)
                    .expect("cartesian coupling holds every cross triplet");
                let block = y.block(idx);
                // Position of each partition-ordered variable in the sorted triplet.
                let pos = [j, k, l].map(|v| sorted.iter().position(|&x| x == v).expect("member"));
                for c in 0..i {
                    for b in 0..i {
                        for a in 0..i {
                            let mut sub = [0; 3];
                            sub[pos[0]] = a;
                            sub[pos[1]] = b;
                            sub[pos[2]] = c;
                            let v = block[sub[0] + i * sub[1] + i * i * sub[2]];
                            tensor.set(&[r * i + a, s * i + b, t * i + c], v);
                        }
                    }
                }
            }
        }
    }
    Ok(StackedTensor {
        partition: p.clone(),
        bins: i,
        tensor,
    })
}

/// `B⁽ⁱ⁾`: lifted factors of `𝓜ᵢ`'s variables stacked vertically,
/// `I·Mᵢ × R`.
pub fn block_factors<T: Scalar>(theta: &ParamVector<T>, p: &Partition) -> Result<[DMatrix<T>; 3]> {
    check_partition(theta, p)?;
    let i = theta.bins();
    Ok(p.sets().clone().map(|set| {
        let mut b = DMatrix::from_element(i * set.len(), theta.rank(), T::zero());
        for r in 0..theta.rank() {
            for (n, &v) in set.iter().enumerate() {
                for (q, x) in theta.lifted(r, v).into_iter().enumerate() {
                    b[(n * i + q, r)] = x;
                }
            }
        }
        b
    }))
}

/// Builds `𝓨 = ⟦λ; B⁽¹⁾, B⁽²⁾, B⁽³⁾⟧` directly from the block factors.
pub fn stack_cpd(theta: &ParamVector<f64>, p: &Partition) -> Result<StackedTensor> {
    let b = block_factors(theta, p)?;
    let dims = vec![b[0].nrows(), b[1].nrows(), b[2].nrows()];
    let mut data = vec![0.0; dims.iter().product()];
    for r in 0..theta.rank() {
        let cols: Vec<Vec<f64>> = b.iter().map(|m| m.column(r).iter().copied().collect()).collect();
        let term = outer_product(&[&cols[0], &cols[1], &cols[2]])?;
        let lam = *theta.lambda(r);
        for (d, x) in data.iter_mut().zip(term.data()) {
            *d += lam * x;
        }
    }
    Ok(StackedTensor {
        partition: p.clone(),
        bins: theta.bins(),
        tensor: DenseTensor::new(dims, data)?,
    })
}

/// `C⁽ⁱ⁾`: a row of ones over the stacked truncated factors of `𝓜ᵢ`,
/// `((I−1)Mᵢ + 1) × R`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedFactors<T: Scalar = f64> {
    pub c: [DMatrix<T>; 3],
}

pub fn reduced_factors<T: Scalar>(theta: &ParamVector<T>, p: &Partition) -> Result<ReducedFactors<T>> {
    check_partition(theta, p)?;
    let k = theta.bins() - 1;
    let c = p.sets().clone().map(|set| {
        let mut c = DMatrix::from_element(1 + k * set.len(), theta.rank(), T::zero());
        for r in 0..theta.rank() {
            c[(0, r)] = T::one();
            for (n, &v) in set.iter().enumerate() {
                for (q, x) in theta.truncated(r, v).iter().enumerate() {
                    c[(1 + n * k + q, r)] = x.clone();
                }
            }
        }
        c
    });
    Ok(ReducedFactors { c })
}

/// `Q` with `B = Q C`: column 0 marks each block's last row, then one copy
/// of the lift Jacobian per variable on the block diagonal.
pub fn build_q<T: Scalar>(mi: usize, i: usize) -> Result<DMatrix<T>> {
    if mi == 0 || i < 2 {
        return Err(Error::invalid(format!("build_q needs M_i >= 1 and I >= 2, got ({mi}, {i})")));
    }
    let k = i - 1;
    Ok(DMatrix::from_fn(mi * i, 1 + mi * k, |row, col| {
        let (v, p) = (row / i, row % i);
        if col == 0 {
            if p == k {
                T::one()
            } else {
                T::zero()
            }
        } else if (col - 1) / k == v {
            lift_jacobian_entry(p, (col - 1) % k, i)
        } else {
            T::zero()
        }
    }))
}

/// `(I_{Mᵢ} ⊗ 𝟙ᵀ_I) B`: per-variable column sums of a block factor.
pub fn block_column_sums<T: Scalar>(b: &DMatrix<T>, i: usize) -> DMatrix<T> {
    let mi = b.nrows() / i;
    DMatrix::from_fn(mi, b.ncols(), |v, r| {
        (0..i).fold(T::zero(), |acc, q| acc + b[(v * i + q, r)].clone())
    })
}

/// `Iᵢ = (I−1)Mᵢ + 1`.
pub fn reduced_sizes(p: &Partition, i: usize) -> [usize; 3] {
    p.sizes().map(|m| (i - 1) * m + 1)
}

/// The Bocci bound at the reduced sizes; `None` when a reduced size is ≤ 2.
pub fn cartesian_ident_bound(p: &Partition, i: usize) -> Option<i64> {
    let [a, b, c] = reduced_sizes(p, i);
    bounds::bocci_bound(a, b, c)
}

/// `⌊⌊M/3⌋²(I−1)²/3 − ⌊M/3⌋(I−1)⌋`, clamped at 0.
pub fn even_partition_bound(m: usize, i: usize) -> usize {
    let x = (m / 3 * (i - 1)) as i64;
    (x * x / 3 - x).max(0) as usize
}
