//! Exact rational arithmetic for computer-checkable certificates.
//!
//! Rank over ℚ is computed by clearing row denominators and running
//! fraction-free (Bareiss) elimination over arbitrary-precision integers, so
//! every intermediate division is exact.

use nalgebra::DMatrix;
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Integer, One, ToPrimitive, Zero};

use crate::{Error, Result};

pub type Rational = BigRational;

/// Largest matrix (in entries) accepted by [`exact_rank`].
pub const MAX_EXACT_ENTRIES: usize = 100_000;

pub fn rational(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Exact value of a finite float.
pub fn from_f64(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| Error::invalid(format!("non-finite value {x}")))
}

pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `"p/q"`, or `"p"` for integers.
pub fn format(x: &Rational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn parse(s: &str) -> Result<Rational> {
    let bad = || Error::invalid(format!("'{s}' is not a rational 'p/q'"));
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s.trim(), "1"),
    };
    let p: BigInt = p.parse().map_err(|_| bad())?;
    let q: BigInt = q.parse().map_err(|_| bad())?;
    if q.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(p, q))
}

/// Exact rank of a rational matrix.
pub fn exact_rank(a: &DMatrix<Rational>) -> Result<usize> {
    if a.len() > MAX_EXACT_ENTRIES {
        return Err(Error::ResourceExhausted(format!(
            "exact rank limited to {MAX_EXACT_ENTRIES} entries, matrix has {}",
            a.len()
        )));
    }
    // Eliminate along the shorter dimension.
    let (rows, cols) = if a.nrows() >= a.ncols() {
        (a.nrows(), a.ncols())
    } else {
        (a.ncols(), a.nrows())
    };
    let at = |i: usize, j: usize| if a.nrows() >= a.ncols() { &a[(i, j)] } else { &a[(j, i)] };

    let mut m: Vec<Vec<BigInt>> = (0..rows)
        .map(|i| {
            let lcm = (0..cols).fold(BigInt::one(), |l, j| l.lcm(at(i, j).denom()));
            (0..cols)
                .map(|j| {
                    let x = at(i, j);
                    x.numer() * (&lcm / x.denom())
                })
                .collect()
        })
        .collect();
    Ok(bareiss_rank(&mut m))
}

/// Rank of an integer matrix by fraction-free elimination; `m` is destroyed.
pub fn bareiss_rank(m: &mut [Vec<BigInt>]) -> usize {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    let mut prev = BigInt::one();
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let (top, rest) = m.split_at_mut(rank + 1);
        let pivot_row = &top[rank];
        let pivot = &pivot_row[col];
        for row in rest.iter_mut() {
            let factor = std::mem::take(&mut row[col]);
            for j in col + 1..cols {
                let v = pivot * &row[j] - &factor * &pivot_row[j];
                debug_assert!((&v % &prev).is_zero());
                row[j] = v / &prev;
            }
        }
        prev = pivot.clone();
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: usize, cols: usize, v: &[i64]) -> DMatrix<Rational> {
        DMatrix::from_row_iterator(rows, cols, v.iter().map(|&x| rational(x, 1)))
    }

    #[test]
    fn ranks_of_small_matrices() {
        assert_eq!(exact_rank(&mat(3, 3, &[1, 0, 0, 0, 1, 0, 0, 0, 1])).unwrap(), 3);
        assert_eq!(exact_rank(&mat(3, 2, &[1, 2, 2, 4, 3, 6])).unwrap(), 1);
        assert_eq!(exact_rank(&mat(2, 3, &[1, 2, 3, 2, 4, 6])).unwrap(), 1);
        assert_eq!(exact_rank(&mat(2, 2, &[0, 0, 0, 0])).unwrap(), 0);
        // First column zero, rank comes from later columns.
        assert_eq!(exact_rank(&mat(3, 3, &[0, 1, 2, 0, 2, 4, 0, 1, 3])).unwrap(), 2);
    }

    #[test]
    fn fractional_entries() {
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[rational(1, 3), rational(1, 6), rational(2, 7), rational(1, 7)],
        );
        assert_eq!(exact_rank(&a).unwrap(), 1);
        let b = DMatrix::from_row_slice(
            2,
            2,
            &[rational(1, 3), rational(1, 6), rational(2, 7), rational(1, 8)],
        );
        assert_eq!(exact_rank(&b).unwrap(), 2);
    }

    #[test]
    fn parse_and_format() {
        assert_eq!(parse("3/6").unwrap(), rational(1, 2));
        assert_eq!(format(&rational(4, 2)), "2");
        assert_eq!(format(&rational(-3, 9)), "-1/3");
        assert!(parse("1/0").is_err());
        assert!(parse("x").is_err());
        assert_eq!(from_f64(0.375).unwrap(), rational(3, 8));
    }

    #[test]
    fn size_cap() {
        let a = DMatrix::from_element(400, 300, rational(1, 1));
        assert!(matches!(exact_rank(&a), Err(Error::ResourceExhausted(_))));
    }
}
