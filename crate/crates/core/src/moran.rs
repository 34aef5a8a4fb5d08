//! The three-color urn: pick a ball uniformly, replace it by a copy of another uniformly
//! picked ball. Everything here is exact; entries of `N² Π` are integers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{factorial, int, pochhammer, rank_bigint, rank_rational, to_f64};
use crate::lift::TriIndex;
use crate::linalg::Matrix;
use crate::par::{map_range, Execution};
use crate::poly::{build_p, hahn_q_poly, UnivariatePoly};

/// Three-color urn with `N` balls; rows of `N² Π` stored sparsely.
#[derive(Clone, Debug, PartialEq)]
pub struct MoranSpec {
    pub n: usize,
    pub index: TriIndex,
    /// `(column, numerator)` pairs; the transition probability is `numerator / N²`.
    pub rows: Vec<Vec<(usize, i64)>>,
}

impl MoranSpec {
    pub fn denominator(&self) -> i64 {
        (self.n * self.n) as i64
    }

    pub fn p(&self, from: (usize, usize), to: (usize, usize)) -> BigRational {
        let r = self.index.index(from.0, from.1);
        let c = self.index.index(to.0, to.1);
        let num = self.rows[r].iter().find(|&&(k, _)| k == c).map_or(0, |&(_, v)| v);
        BigRational::new(num.into(), self.denominator().into())
    }

    pub fn matrix(&self) -> Matrix {
        let size = self.index.size();
        let mut m = Matrix::zeros(size, size);
        let den = self.denominator() as f64;
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                m[(r, c)] = v as f64 / den;
            }
        }
        m
    }

    /// `N² Π v`.
    pub fn apply_scaled(&self, v: &[BigRational]) -> Vec<BigRational> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .fold(BigRational::zero(), |acc, &(c, w)| acc + &v[c] * int(w))
            })
            .collect()
    }

    /// `N² Π - λ I` as an integer matrix, for an integer `λ`.
    fn shifted_integer(&self, lambda: i64) -> Vec<Vec<BigInt>> {
        let size = self.index.size();
        (0..size)
            .map(|r| {
                let mut row = vec![BigInt::zero(); size];
                for &(c, w) in &self.rows[r] {
                    row[c] += w;
                }
                row[r] -= lambda;
                row
            })
            .collect()
    }
}

pub fn transition_matrix(n: usize) -> Result<MoranSpec> {
    if n < 2 {
        return Err(Error::Validation(format!("the urn needs N >= 2 balls, got {n}")));
    }
    let index = TriIndex::new(n);
    let rows = index
        .states()
        .iter()
        .map(|&(i, j)| {
            let (ii, jj, kk) = (i as i64, j as i64, (n - i - j) as i64);
            let mut row = Vec::with_capacity(7);
            let mut push = |to: (usize, usize), w: i64| {
                if w != 0 {
                    row.push((index.index(to.0, to.1), w));
                }
            };
            // The third color becomes the first or second one, and back.
            if kk > 0 {
                push((i + 1, j), ii * kk);
                push((i, j + 1), jj * kk);
            }
            if i > 0 {
                push((i - 1, j), ii * kk);
                push((i - 1, j + 1), ii * jj);
            }
            if j > 0 {
                push((i, j - 1), jj * kk);
                push((i + 1, j - 1), ii * jj);
            }
            push((i, j), ii * ii + jj * jj + kk * kk);
            row.sort_unstable();
            row
        })
        .collect();
    Ok(MoranSpec { n, index, rows })
}

/// `1 - k(k-1)/N²`.
pub fn urn_eigenvalue(n: usize, k: usize) -> BigRational {
    int(1) - BigRational::new(BigInt::from(k * k.saturating_sub(1)), BigInt::from(n * n))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectrumEntry {
    pub value: BigRational,
    pub multiplicity: usize,
}

/// Eigenvalue 1 three times, then `1 - k(k-1)/N²` with multiplicity `k+1` for `k = 2..=N`.
pub fn predicted_spectrum(n: usize) -> Vec<SpectrumEntry> {
    let mut out = vec![SpectrumEntry {
        value: int(1),
        multiplicity: 3,
    }];
    out.extend((2..=n).map(|k| SpectrumEntry {
        value: urn_eigenvalue(n, k),
        multiplicity: k + 1,
    }));
    out
}

/// `p(X + a)`.
fn shift(p: &UnivariatePoly, a: i64) -> UnivariatePoly {
    let step = UnivariatePoly::linear(int(a), int(1));
    p.coeffs().iter().rev().fold(UnivariatePoly::zero(), |acc, c| {
        &(&acc * &step) + &UnivariatePoly::constant(c.clone())
    })
}

/// Polynomial solution `u_k` of degree `n` of the one-dimensional eigen-recurrence at level `d`.
///
/// For `d = 0` the Hahn parameters sit on a pole (`α + 1 = 0`); the solution is then the
/// limit after multiplying by `α + 1`, which is `N - X` for `n = 1` and otherwise
/// `Σ_{j≥1} (-n)_j (-X)_j (n-1)_j / ((j-1)! (-N)_j j!)`.
pub fn hahn_solution(n_balls: usize, d: usize, n: usize) -> Result<UnivariatePoly> {
    let big_n = n_balls as i64;
    if d == 0 {
        if n == 0 {
            return Ok(UnivariatePoly::constant(int(1)));
        }
        if n == 1 {
            return Ok(UnivariatePoly::linear(int(big_n), int(-1)));
        }
        let mut acc = UnivariatePoly::zero();
        let mut neg_x_rising = UnivariatePoly::constant(int(1));
        for j in 1..=n as u32 {
            neg_x_rising = &neg_x_rising * &UnivariatePoly::linear(int(j as i64 - 1), int(-1));
            let den = pochhammer(&int(-big_n), j) * BigRational::from_integer(factorial(j - 1) * factorial(j));
            if den.is_zero() {
                return Err(Error::Pole(crate::poly::PoleError { k: j }));
            }
            let c = pochhammer(&int(-(n as i64)), j) * pochhammer(&int(n as i64 - 1), j) / den;
            acc = &acc + &neg_x_rising.scale(&c);
        }
        return Ok(acc);
    }
    let q = hahn_q_poly(n as u32, &int(2 * d as i64 - 1), &int(-1), big_n - d as i64 + 1)?;
    Ok(shift(&q, -(d as i64)))
}

/// `R_n^{(N,d)}` with `(N - X) R = Q_n(X - d; 2d-1, -1, N-d+1)`, normalized by `Q_n(0) = 1`.
pub fn r_polynomial(n_balls: usize, d: usize, n: usize) -> Result<UnivariatePoly> {
    if n == 0 {
        return Err(Error::Validation("R_n is defined for n >= 1".into()));
    }
    let u = hahn_solution(n_balls, d, n)?;
    let divisor = UnivariatePoly::linear(int(n_balls as i64), int(-1));
    let (q, r) = u.div_rem(&divisor).expect("divisor is nonzero");
    if !r.is_zero() {
        return Err(Error::DivisionRemainder {
            n,
            d,
            deg: u.degree().unwrap_or(0),
        });
    }
    Ok(q)
}

#[derive(Clone, Debug, PartialEq)]
pub struct UrnEigenvector {
    pub d: usize,
    pub n: usize,
    pub theta: BigRational,
    /// Values on the triangle, rational cores (the scale of `P_d` is dropped).
    pub values: Vec<BigRational>,
}

/// `P_d(i,j)` for `n = 0`, `P_d(i,j) (N-i-j) R_n(i+j)` for `1 <= n <= N-d`.
pub fn eigenvectors(n_balls: usize, exec: Execution) -> Result<Vec<UrnEigenvector>> {
    let index = TriIndex::new(n_balls);
    let per_d = map_range(exec, n_balls + 1, |d| -> Result<Vec<UrnEigenvector>> {
        let p = build_p(d as u32);
        let mut out = Vec::new();
        for n in 0..=(n_balls - d) {
            let r = if n == 0 {
                None
            } else {
                Some(r_polynomial(n_balls, d, n)?)
            };
            let values = index
                .states()
                .iter()
                .map(|&(i, j)| {
                    let base = p.core_value(i as i64, j as i64);
                    match &r {
                        None => base,
                        Some(r) => base * int((n_balls - i - j) as i64) * r.eval_int((i + j) as i64),
                    }
                })
                .collect();
            out.push(UrnEigenvector {
                d,
                n,
                theta: urn_eigenvalue(n_balls, d + n),
                values,
            });
        }
        Ok(out)
    });
    Ok(per_d.into_iter().collect::<Result<Vec<_>>>()?.concat())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenspaceDim {
    pub k: usize,
    pub eigenvalue: String,
    pub predicted: usize,
    /// Nullity of `Π - θ I`, computed exactly.
    pub nullity: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MoranReport {
    pub n: usize,
    pub eigenvectors: usize,
    pub expected: usize,
    /// `(d, n)` pairs whose eigen-equation failed or whose vector vanished.
    pub failures: Vec<(usize, usize)>,
    pub all_residuals_zero: bool,
    pub basis_rank: usize,
    pub dims: Vec<EigenspaceDim>,
    pub spectrum_matches: bool,
    pub verdict: String,
}

impl MoranReport {
    pub fn passes(&self) -> bool {
        self.all_residuals_zero && self.spectrum_matches
    }
}

fn ratio_string(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn verify_eigen(n_balls: usize) -> Result<MoranReport> {
    verify_eigen_with(n_balls, Execution::default())
}

pub fn verify_eigen_with(n_balls: usize, exec: Execution) -> Result<MoranReport> {
    let spec = transition_matrix(n_balls)?;
    let vectors = eigenvectors(n_balls, exec)?;
    let den = int(spec.denominator());
    let failed = map_range(exec, vectors.len(), |k| {
        let v = &vectors[k];
        let lhs = spec.apply_scaled(&v.values);
        let lambda = &v.theta * &den;
        let ok = v.values.iter().any(|x| !x.is_zero()) && lhs.iter().zip(&v.values).all(|(a, b)| *a == &lambda * b);
        (!ok).then_some((v.d, v.n))
    });
    let failures: Vec<_> = failed.into_iter().flatten().collect();
    let rows: Vec<Vec<BigRational>> = vectors.iter().map(|v| v.values.clone()).collect();
    let basis_rank = rank_rational(&rows);
    let predicted = predicted_spectrum(n_balls);
    let dims: Vec<EigenspaceDim> = map_range(exec, predicted.len(), |e| {
        let entry = &predicted[e];
        let k = if e == 0 { 1 } else { e + 1 };
        let lambda = (&entry.value * &den).to_integer();
        let lambda: i64 = lambda.try_into().expect("N² θ fits in i64");
        EigenspaceDim {
            k,
            eigenvalue: ratio_string(&entry.value),
            predicted: entry.multiplicity,
            nullity: spec.index.size() - rank_bigint(spec.shifted_integer(lambda)),
        }
    });
    let mut assembled: Vec<(BigRational, usize)> = Vec::new();
    for v in &vectors {
        match assembled.iter_mut().find(|(t, _)| *t == v.theta) {
            Some(slot) => slot.1 += 1,
            None => assembled.push((v.theta.clone(), 1)),
        }
    }
    let size = spec.index.size();
    let multiset_ok = assembled.len() == predicted.len()
        && predicted
            .iter()
            .all(|e| assembled.iter().any(|(t, m)| *t == e.value && *m == e.multiplicity));
    let spectrum_matches = multiset_ok && basis_rank == size && dims.iter().all(|d| d.nullity == d.predicted);
    let all_residuals_zero = failures.is_empty();
    let verdict = match (all_residuals_zero, spectrum_matches) {
        (true, true) => "all eigen-residuals zero; spectrum matches".to_string(),
        (false, _) => format!("{} eigen-residuals nonzero", failures.len()),
        (true, false) => "eigen-residuals zero; spectrum mismatch".to_string(),
    };
    Ok(MoranReport {
        n: n_balls,
        eigenvectors: vectors.len(),
        expected: size,
        failures,
        all_residuals_zero,
        basis_rank,
        dims,
        spectrum_matches,
        verdict,
    })
}

/// The two-color urn on `{0..N}`: `k -> k±1` with probability `k(N-k)/N²` each.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwoColorReport {
    pub n: usize,
    pub residuals_zero: bool,
    pub basis_rank: usize,
    /// `(k, nullity of Π - θ_k I)` for `k = 0..=N`, skipping `k = 1`.
    pub nullities: Vec<(usize, usize)>,
}

impl TwoColorReport {
    pub fn passes(&self) -> bool {
        self.residuals_zero
            && self.basis_rank == self.n + 1
            && self.nullities.iter().all(|&(k, m)| m == if k == 0 { 2 } else { 1 })
    }
}

pub fn two_color(n_balls: usize) -> Result<TwoColorReport> {
    if n_balls < 2 {
        return Err(Error::Validation(format!("the urn needs N >= 2 balls, got {n_balls}")));
    }
    let nn = n_balls as i64;
    // N² Π
    let scaled = |r: usize, c: usize| -> i64 {
        let k = r as i64;
        let w = k * (nn - k);
        match c as i64 - k {
            0 => nn * nn - 2 * w,
            1 | -1 => w,
            _ => 0,
        }
    };
    let mut vectors: Vec<(BigRational, Vec<BigRational>)> = vec![(int(1), vec![int(1); n_balls + 1])];
    for n in 1..=n_balls {
        let r = r_polynomial(n_balls, 0, n)?;
        let v = (0..=n_balls)
            .map(|k| int(nn - k as i64) * r.eval_int(k as i64))
            .collect();
        vectors.push((urn_eigenvalue(n_balls, n), v));
    }
    let den = int(nn * nn);
    let residuals_zero = vectors.iter().all(|(theta, v)| {
        (0..=n_balls).all(|r| {
            let lhs = (0..=n_balls).fold(BigRational::zero(), |acc, c| acc + &v[c] * int(scaled(r, c)));
            lhs == theta * &den * &v[r]
        })
    });
    let basis_rank = rank_rational(&vectors.iter().map(|(_, v)| v.clone()).collect::<Vec<_>>());
    let nullities = (0..=n_balls)
        .filter(|&k| k != 1)
        .map(|k| {
            let lambda = nn * nn - (k * k.saturating_sub(1)) as i64;
            let m = (0..=n_balls)
                .map(|r| {
                    (0..=n_balls)
                        .map(|c| BigInt::from(scaled(r, c) - if r == c { lambda } else { 0 }))
                        .collect()
                })
                .collect();
            (k, n_balls + 1 - rank_bigint(m))
        })
        .collect();
    Ok(TwoColorReport {
        n: n_balls,
        residuals_zero,
        basis_rank,
        nullities,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubspaceCheck {
    pub k: usize,
    /// Exact ranks of the three generator families on `{i, j >= 1, i + j <= N - 1}`.
    pub ranks: [usize; 3],
    pub stacked_rank: usize,
    /// Largest relative distance of a generator of one family to the span of another.
    pub max_residual: f64,
}

impl SubspaceCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.ranks.iter().all(|&r| r == self.stacked_rank) && self.max_residual < tol
    }
}

/// Relative residual of `x` after projection on the span of `basis` (orthonormal).
fn projection_residual(basis: &[Vec<f64>], x: &[f64]) -> f64 {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return 0.0;
    }
    let mut r = x.to_vec();
    for _ in 0..2 {
        for q in basis {
            let c: f64 = q.iter().zip(&r).map(|(a, b)| a * b).sum();
            r.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
        }
    }
    r.iter().map(|v| v * v).sum::<f64>().sqrt() / norm
}

fn orthonormal(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for x in rows {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if projection_residual(&basis, x) < 1e-10 || norm == 0.0 {
            continue;
        }
        let mut r = x.clone();
        for _ in 0..2 {
            for q in &basis {
                let c: f64 = q.iter().zip(&r).map(|(a, b)| a * b).sum();
                r.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        let n = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        basis.push(r.into_iter().map(|v| v / n).collect());
    }
    basis
}

/// For `3 <= k <= N`, compare the spans of
/// `(N-i-j) P_d(i,j) R_{k-d}(i+j)`, `j P_d(i,N-i-j) R_{k-d}(N-j)` and `i P_d(N-i-j,j) R_{k-d}(N-i)`,
/// `d = 2..k-1`, on the interior states away from the third-color-free edge.
pub fn subspace_identity(n_balls: usize) -> Result<Vec<SubspaceCheck>> {
    let states: Vec<(i64, i64)> = (1..n_balls as i64)
        .flat_map(|i| (1..n_balls as i64 - i).map(move |j| (i, j)))
        .collect();
    let nn = n_balls as i64;
    let mut out = Vec::new();
    for k in 3..=n_balls {
        let mut families: [Vec<Vec<BigRational>>; 3] = Default::default();
        for d in 2..k {
            let p = build_p(d as u32);
            let r = r_polynomial(n_balls, d, k - d)?;
            let at = |f: &dyn Fn(i64, i64) -> BigRational| states.iter().map(|&(i, j)| f(i, j)).collect::<Vec<_>>();
            families[0].push(at(&|i, j| int(nn - i - j) * p.core_value(i, j) * r.eval_int(i + j)));
            families[1].push(at(&|i, j| int(j) * p.core_value(i, nn - i - j) * r.eval_int(nn - j)));
            families[2].push(at(&|i, j| int(i) * p.core_value(nn - i - j, j) * r.eval_int(nn - i)));
        }
        let ranks = [
            rank_rational(&families[0]),
            rank_rational(&families[1]),
            rank_rational(&families[2]),
        ];
        let stacked: Vec<Vec<BigRational>> = families.iter().flatten().cloned().collect();
        let stacked_rank = rank_rational(&stacked);
        let float: Vec<Vec<Vec<f64>>> = families
            .iter()
            .map(|fam| fam.iter().map(|row| row.iter().map(to_f64).collect()).collect())
            .collect();
        let bases: Vec<Vec<Vec<f64>>> = float.iter().map(|f| orthonormal(f)).collect();
        let mut max_residual = 0.0f64;
        for (a, fam) in float.iter().enumerate() {
            for (b, basis) in bases.iter().enumerate() {
                if a != b {
                    for x in fam {
                        max_residual = max_residual.max(projection_residual(basis, x));
                    }
                }
            }
        }
        out.push(SubspaceCheck {
            k,
            ranks,
            stacked_rank,
            max_residual,
        });
    }
    Ok(out)
}

/// Exact `|R_n(k)|` maximum over `d <= k <= N-1`, for checking that `R_n` vanishes there when `n > N-d`.
pub fn r_max_abs_on_levels(n_balls: usize, d: usize, n: usize) -> Result<BigRational> {
    let r = r_polynomial(n_balls, d, n)?;
    Ok((d..n_balls)
        .map(|k| r.eval_int(k as i64).abs())
        .fold(BigRational::zero(), |a, b| if b > a { b } else { a }))
}
