//! Exact integer and rational helpers shared by the polynomial, lifting and urn modules.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Binomial coefficient with the empty-selection convention.
///
/// `binom(n, 0) = 1` for every integer `n`, including negative ones.
/// Otherwise the value is zero when `k < 0`, when `n >= 0` and `k > n`,
/// or when `n < 0` and `k > 0`.
pub fn binom(n: i64, k: i64) -> BigInt {
    if k < 0 {
        return BigInt::zero();
    }
    if k == 0 {
        return BigInt::one();
    }
    if n < 0 || k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for t in 0..k {
        acc *= n - t;
        acc /= t + 1;
    }
    acc
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Rising factorial `(a)_k = a (a+1) ... (a+k-1)`.
pub fn pochhammer(a: &BigRational, k: u32) -> BigRational {
    let mut acc = BigRational::one();
    let mut term = a.clone();
    for _ in 0..k {
        acc *= &term;
        term += BigRational::one();
    }
    acc
}

pub fn factorial(k: u32) -> BigInt {
    (1..=k as i64).fold(BigInt::one(), |acc, t| acc * t)
}

/// Correctly-rounded conversion; falls back to a scaled division for huge operands.
pub fn to_f64(q: &BigRational) -> f64 {
    if let Some(v) = q.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    let n = q.numer().to_f64().unwrap_or(f64::NAN);
    let d = q.denom().to_f64().unwrap_or(f64::NAN);
    n / d
}

/// `sign * sqrt(scale_sq) * value`, rounded once from the exact radicand.
pub fn scaled_sqrt_to_f64(sign: i8, scale_sq: &BigRational, value: &BigRational) -> f64 {
    if value.is_zero() {
        return 0.0;
    }
    let radicand = scale_sq * value * value;
    let magnitude = to_f64(&radicand).sqrt();
    let s = if value.is_negative() { -sign } else { sign };
    if s < 0 {
        -magnitude
    } else {
        magnitude
    }
}

/// Exact rank of an integer matrix by fraction-free (Bareiss) elimination.
pub fn rank_bigint(mut rows: Vec<Vec<BigInt>>) -> usize {
    let n_rows = rows.len();
    if n_rows == 0 {
        return 0;
    }
    let n_cols = rows[0].len();
    let mut rank = 0usize;
    let mut prev_pivot = BigInt::one();
    for col in 0..n_cols {
        if rank == n_rows {
            break;
        }
        let Some(pivot_row) = (rank..n_rows).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot_row);
        let pivot = rows[rank][col].clone();
        let (done, rest) = rows.split_at_mut(rank + 1);
        let pivot_row = &done[rank];
        for row in rest {
            let factor = row[col].clone();
            for (x, p) in row.iter_mut().zip(pivot_row) {
                *x = (&pivot * &*x - &factor * p) / &prev_pivot;
            }
        }
        prev_pivot = pivot;
        rank += 1;
    }
    rank
}

/// Exact rank of a rational matrix: rows are scaled to integers first.
pub fn rank_rational(rows: &[Vec<BigRational>]) -> usize {
    let int_rows = rows
        .iter()
        .map(|row| {
            let lcm = row
                .iter()
                .fold(BigInt::one(), |acc, q| num_integer::Integer::lcm(&acc, q.denom()));
            row.iter()
                .map(|q| (q * BigRational::from_integer(lcm.clone())).to_integer())
                .collect()
        })
        .collect();
    rank_bigint(int_rows)
}

/// Exact determinant of a square rational matrix (Gaussian elimination over Q).
pub fn det_rational(mut m: Vec<Vec<BigRational>>) -> BigRational {
    let n = m.len();
    let mut det = BigRational::one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return BigRational::zero();
        };
        if p != col {
            m.swap(p, col);
            det = -det;
        }
        let pivot = m[col][col].clone();
        det *= &pivot;
        let (done, rest) = m.split_at_mut(col + 1);
        let pivot_row = &done[col];
        for row in rest {
            if row[col].is_zero() {
                continue;
            }
            let f = &row[col] / &pivot;
            for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= p * &f;
            }
        }
    }
    det
}
