//! Symmetrizable eigenproblems, Perron pairs, weighted operator norms and the
//! assembled eigenbasis of the lifted chain.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, ReversibleMeasure};
use crate::lift::{interior_states, lift_block, lift_full, mu_d, nu_measure, truncate, LiftedChain, TriIndex};
use crate::linalg::{
    irreducibility_witness, jacobi_eigen, norm2, norm_inf, singular_values, strongly_connected_components, Lu, Matrix,
};
use crate::poly::PolyFamily;

pub const DEFAULT_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-8;
const MAX_ITERATIONS: usize = 1_000_000;

/// Cooperative cancellation flag shared between a caller and a long-running solve.
#[derive(Clone, Debug, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::Relaxed);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::Relaxed)
    }
}

/// Right eigenvectors of a `w`-reversible matrix, `w`-orthonormal, as columns.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

/// Fails unless `w_a m_ab = w_b m_ba` for all pairs, within `1e-8` relative.
pub fn check_symmetrizable(m: &Matrix, w: &[f64]) -> Result<()> {
    assert!(m.is_square() && m.rows() == w.len());
    let n = m.rows();
    let mut scale = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            scale = scale.max((w[a] * m[(a, b)]).abs());
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            let lhs = w[a] * m[(a, b)];
            let rhs = w[b] * m[(b, a)];
            let local = lhs.abs().max(rhs.abs());
            let diff = (lhs - rhs).abs();
            if diff > SYMMETRY_TOL * local && diff > 1e-14 * scale {
                return Err(Error::NotSymmetrizable {
                    i: a,
                    j: b,
                    defect: diff / local,
                });
            }
        }
    }
    Ok(())
}

fn symmetrized(m: &Matrix, w: &[f64]) -> Matrix {
    let n = m.rows();
    let mut s = Matrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            s[(a, b)] = (w[a] / w[b]).sqrt() * m[(a, b)];
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            let avg = 0.5 * (s[(a, b)] + s[(b, a)]);
            s[(a, b)] = avg;
            s[(b, a)] = avg;
        }
    }
    s
}

/// Full spectrum of a `w`-reversible matrix through `D^{1/2} M D^{-1/2}`, `D = diag(w)`.
pub fn sym_eigen(m: &Matrix, w: &[f64]) -> Result<SymEigen> {
    check_symmetrizable(m, w)?;
    let (values, y) = jacobi_eigen(&symmetrized(m, w));
    let n = m.rows();
    let mut vectors = y;
    for r in 0..n {
        let f = 1.0 / w[r].sqrt();
        for c in 0..n {
            vectors[(r, c)] *= f;
        }
    }
    Ok(SymEigen { values, vectors })
}

/// Operator norm in `l²(w)` of a `w`-self-adjoint matrix.
pub fn weighted_operator_norm(m: &Matrix, w: &[f64]) -> Result<f64> {
    check_symmetrizable(m, w)?;
    let (values, _) = jacobi_eigen(&symmetrized(m, w));
    Ok(values.iter().fold(0.0f64, |acc, v| acc.max(v.abs())))
}

/// Perron root with positive right and left eigenvectors, `v·1 = 1`, `v·u = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct PerronPair {
    pub theta: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

pub fn perron_pair(m: &Matrix, tol: f64) -> Result<PerronPair> {
    perron_pair_with(m, tol, None)
}

pub fn perron_pair_with(m: &Matrix, tol: f64, cancel: Option<&CancelToken>) -> Result<PerronPair> {
    if !m.is_square() || m.rows() == 0 {
        return Err(Error::Validation("Perron pair needs a non-empty square matrix".into()));
    }
    if m.data().iter().any(|x| *x < 0.0 || !x.is_finite()) {
        return Err(Error::Validation(
            "Perron pair needs a nonnegative finite matrix".into(),
        ));
    }
    if m.rows() == 1 {
        return Ok(PerronPair {
            theta: m[(0, 0)],
            u: vec![1.0],
            v: vec![1.0],
        });
    }
    if let Some(witness) = irreducibility_witness(m) {
        return Err(Error::NotIrreducible { witness });
    }
    let (theta_r, mut u) = perron_vector(m, tol, cancel)?;
    let (_, mut v) = perron_vector(&m.transpose(), tol, cancel)?;
    let sv: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= sv);
    let vu: f64 = v.iter().zip(&u).map(|(a, b)| a * b).sum();
    u.iter_mut().for_each(|x| *x /= vu);
    let mu = m.mul_vec(&u);
    let theta = v.iter().zip(&mu).map(|(a, b)| a * b).sum::<f64>();
    let theta = if theta.is_finite() && theta > 0.0 {
        theta
    } else {
        theta_r
    };
    Ok(PerronPair { theta, u, v })
}

/// Collatz–Wielandt bounds `min (Mx)_i / x_i <= ρ <= max (Mx)_i / x_i` for positive `x`.
fn collatz_wielandt(m: &Matrix, x: &[f64]) -> (f64, f64) {
    let mx = m.mul_vec(x);
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for (a, b) in mx.iter().zip(x) {
        let r = a / b;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    (lo, hi)
}

fn normalize_max(x: &mut [f64]) {
    let s = norm_inf(x);
    x.iter_mut().for_each(|v| *v = v.abs() / s);
}

/// Right Perron vector of an irreducible nonnegative matrix.
///
/// A few power steps on `M + cI` (which is primitive) produce a positive vector;
/// shifted inverse iteration with the shift kept just above the Collatz–Wielandt
/// upper bound then converges to the Perron vector for periodic matrices too.
fn perron_vector(m: &Matrix, tol: f64, cancel: Option<&CancelToken>) -> Result<(f64, Vec<f64>)> {
    let n = m.rows();
    let c = m.row_sums().into_iter().fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    let mut x = vec![1.0; n];
    for _ in 0..(2 * n).max(20) {
        let mut y = m.mul_vec(&x);
        for (yi, xi) in y.iter_mut().zip(&x) {
            *yi += c * xi;
        }
        normalize_max(&mut y);
        x = y;
    }
    let mut prev_theta = f64::NAN;
    let mut stable = 0;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        if cancel.is_some_and(CancelToken::is_cancelled) {
            return Err(Error::Cancelled);
        }
        if x.iter().any(|v| *v <= 0.0) {
            // A component underflowed; fall back to a power step on M + cI.
            let mut y = m.mul_vec(&x);
            for (yi, xi) in y.iter_mut().zip(&x) {
                *yi += c * xi + f64::MIN_POSITIVE;
            }
            normalize_max(&mut y);
            x = y;
            continue;
        }
        let (lo, hi) = collatz_wielandt(m, &x);
        let theta = 0.5 * (lo + hi);
        let mx = m.mul_vec(&x);
        let residual = mx
            .iter()
            .zip(&x)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - theta * b).abs()))
            / (theta * norm_inf(&x));
        let change = ((theta - prev_theta) / theta).abs();
        if residual < tol && change < tol {
            stable += 1;
            if stable >= 2 || hi - lo <= tol * theta {
                return Ok((theta, x));
            }
        } else {
            stable = 0;
        }
        prev_theta = theta;
        let sigma = hi + (hi - lo) + 1e-10 * hi + f64::MIN_POSITIVE;
        let Some(lu) = Lu::new(&m.shifted_negative(sigma)) else {
            return Ok((hi, x));
        };
        let mut y = lu.solve(&x);
        if y.iter().any(|v| !v.is_finite()) {
            return Ok((theta, x));
        }
        normalize_max(&mut y);
        x = y;
    }
    Err(Error::NoConvergence { iterations })
}

/// Spectral radius of a nonnegative matrix: maximum Perron root over its irreducible components.
pub fn spectral_radius(m: &Matrix) -> Result<f64> {
    let mut best = 0.0f64;
    for comp in strongly_connected_components(m) {
        let sub = m.submatrix(&comp);
        let rho = if comp.len() == 1 {
            sub[(0, 0)]
        } else {
            perron_pair(&sub, DEFAULT_TOL)?.theta
        };
        best = best.max(rho);
    }
    Ok(best)
}

/// Eigen-data of one block `Π_d` (for `d = 0`, of `Π̃₀` on `{1..N}`).
#[derive(Clone, Debug)]
pub struct SpectralBlock {
    pub d: usize,
    /// First population the block vectors are indexed from.
    pub offset: usize,
    pub eigenvalues: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

pub fn spectral_block(spec: &KernelSpec, mu: &ReversibleMeasure, d: usize) -> Result<SpectralBlock> {
    let (matrix, weights, offset) = if d == 0 {
        (spec.interior(), mu.weights().to_vec(), 1)
    } else {
        (lift_block(spec, d)?.matrix, mu_d(mu, d), d)
    };
    let eig = sym_eigen(&matrix, &weights)?;
    Ok(SpectralBlock {
        d,
        offset,
        vectors: (0..eig.values.len()).map(|c| eig.vectors.column(c)).collect(),
        eigenvalues: eig.values,
    })
}

#[derive(Clone, Debug)]
pub struct BasisVector {
    pub theta: f64,
    pub d: usize,
    pub v: Vec<f64>,
}

/// `(N+1)(N+2)/2` eigenvectors of `Π` of the form `P_d(i, j) u_{i+j}`.
#[derive(Clone, Debug)]
pub struct AssembledBasis {
    pub index: TriIndex,
    pub vectors: Vec<BasisVector>,
}

pub fn assemble_basis(spec: &KernelSpec, mu: &ReversibleMeasure) -> Result<AssembledBasis> {
    let n = spec.n();
    let index = TriIndex::new(n);
    let family = PolyFamily::up_to(n as u32);
    let mut vectors = vec![BasisVector {
        theta: 1.0,
        d: 0,
        v: vec![1.0; index.size()],
    }];
    for d in 0..=n {
        let block = spectral_block(spec, mu, d)?;
        for (theta, u) in block.eigenvalues.iter().zip(&block.vectors) {
            let v = index
                .states()
                .iter()
                .map(|&(i, j)| {
                    let s = i + j;
                    if s < block.offset {
                        return 0.0;
                    }
                    let weight = match d {
                        0 => 1.0,
                        _ => family.eval(d as u32, i as i64, j as i64),
                    };
                    weight * u[s - block.offset]
                })
                .collect();
            vectors.push(BasisVector { theta: *theta, d, v });
        }
    }
    Ok(AssembledBasis { index, vectors })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasisCheck {
    pub count: usize,
    pub expected: usize,
    pub max_residual: f64,
    pub min_singular_value: f64,
}

impl BasisCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.count == self.expected && self.max_residual < tol && self.min_singular_value > tol
    }
}

impl AssembledBasis {
    /// Column-normalized matrix of the assembled vectors.
    pub fn matrix(&self) -> Matrix {
        let rows = self.index.size();
        let mut m = Matrix::zeros(rows, self.vectors.len());
        for (c, bv) in self.vectors.iter().enumerate() {
            let norm = norm2(&bv.v);
            for r in 0..rows {
                m[(r, c)] = bv.v[r] / norm;
            }
        }
        m
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.vectors.iter().map(|b| b.theta).collect();
        e.sort_by(|a, b| b.total_cmp(a));
        e
    }

    /// Largest `‖Π v - θ v‖ / ‖v‖` over the basis.
    pub fn max_residual(&self, chain: &LiftedChain) -> f64 {
        self.vectors
            .iter()
            .map(|bv| {
                let pv = chain.pi.mul_vec(&bv.v);
                let r: Vec<f64> = pv.iter().zip(&bv.v).map(|(a, b)| a - bv.theta * b).collect();
                norm2(&r) / norm2(&bv.v)
            })
            .fold(0.0, f64::max)
    }

    pub fn check(&self, chain: &LiftedChain) -> BasisCheck {
        let sv = singular_values(&self.matrix());
        BasisCheck {
            count: self.vectors.len(),
            expected: self.index.size(),
            max_residual: self.max_residual(chain),
            min_singular_value: sv.last().copied().unwrap_or(0.0),
        }
    }
}

/// `{1} ∪ Sp(Π̃₀) ∪ Sp(Π₁) ∪ ... ∪ Sp(Π_N)`, sorted descending.
pub fn block_spectrum_union(spec: &KernelSpec, mu: &ReversibleMeasure) -> Result<Vec<f64>> {
    let mut out = vec![1.0];
    for d in 0..=spec.n() {
        out.extend(spectral_block(spec, mu, d)?.eigenvalues);
    }
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}

/// Weighted norms comparing a kernel with its truncation at `N'`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct TruncationNorms {
    pub n: usize,
    pub n_prime: usize,
    /// `|||Π̃₀ - Π̃'₀|||` in `l²(μ)`.
    pub base: f64,
    /// `|||Π_d - Π'_d|||` in `l²(μ^(d))` for `d = 1..=N`.
    pub blocks: Vec<f64>,
    /// `|||Π̃ - Π̃'|||` in `l²(ν)` on the interior.
    pub interior: f64,
}

impl TruncationNorms {
    /// `sup_{d >= 2}` of the block norms.
    pub fn sup_high_blocks(&self) -> f64 {
        self.blocks.iter().skip(1).fold(0.0, |a, b| a.max(*b))
    }
}

pub fn compare_truncation(spec: &KernelSpec, mu: &ReversibleMeasure, n_prime: usize) -> Result<TruncationNorms> {
    let n = spec.n();
    let t = truncate(spec, n_prime)?;
    let base = weighted_operator_norm(&spec.interior().sub(&t.interior), mu.weights())?;
    let mut blocks = Vec::with_capacity(n);
    for d in 1..=n {
        let a = lift_block(spec, d)?.matrix;
        let b = lift_block(&t.extended, d)?.matrix;
        blocks.push(weighted_operator_norm(&a.sub(&b), &mu_d(mu, d))?);
    }
    let interior = if n >= 2 {
        let full = lift_full(spec)?;
        let cut = lift_full(&t.extended)?;
        let idx: Vec<usize> = interior_states(n)
            .iter()
            .map(|&(i, j)| full.index.index(i, j))
            .collect();
        let diff = full.pi.submatrix(&idx).sub(&cut.pi.submatrix(&idx));
        weighted_operator_norm(&diff, &nu_measure(mu, n))?
    } else {
        0.0
    };
    Ok(TruncationNorms {
        n,
        n_prime,
        base,
        blocks,
        interior,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sym_eigen_two_by_two() {
        let m = Matrix::from_rows(&[vec![0.2, 0.1], vec![0.1, 0.2]]);
        let e = sym_eigen(&m, &[1.0, 1.0]).unwrap();
        assert!((e.values[0] - 0.3).abs() < 1e-15 && (e.values[1] - 0.1).abs() < 1e-15);
        assert!((weighted_operator_norm(&m, &[1.0, 1.0]).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(
            weighted_operator_norm(&Matrix::identity(3), &[1.0, 2.0, 3.0]).unwrap(),
            1.0
        );
    }

    #[test]
    fn not_symmetrizable() {
        let m = Matrix::from_rows(&[vec![0.2, 0.3], vec![0.1, 0.2]]);
        assert!(matches!(
            sym_eigen(&m, &[1.0, 1.0]),
            Err(Error::NotSymmetrizable { .. })
        ));
    }

    #[test]
    fn perron_examples() {
        let p = perron_pair(&Matrix::from_rows(&[vec![0.5]]), 1e-12).unwrap();
        assert_eq!((p.theta, p.u.clone(), p.v.clone()), (0.5, vec![1.0], vec![1.0]));
        let p = perron_pair(&Matrix::from_rows(&[vec![0.2, 0.1], vec![0.1, 0.2]]), 1e-12).unwrap();
        assert!((p.theta - 0.3).abs() < 1e-14);
        assert!((p.v[0] - 0.5).abs() < 1e-14 && (p.u[0] - 1.0).abs() < 1e-14);
        let p = perron_pair(&Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]), 1e-12).unwrap();
        assert!((p.theta - 1.0).abs() < 1e-14);
        assert!((p.u[0] - p.u[1]).abs() < 1e-14);
    }

    #[test]
    fn perron_rejects_reducible() {
        let m = Matrix::from_rows(&[vec![0.5, 0.1], vec![0.0, 0.4]]);
        assert!(matches!(perron_pair(&m, 1e-12), Err(Error::NotIrreducible { .. })));
        assert!((spectral_radius(&m).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cancellation() {
        let token = CancelToken::new();
        token.cancel();
        let m = Matrix::from_rows(&[vec![0.2, 0.1], vec![0.1, 0.2]]);
        assert_eq!(perron_pair_with(&m, 1e-12, Some(&token)), Err(Error::Cancelled));
    }

    #[test]
    fn basis_for_n1() {
        let k = KernelSpec::birth_death(&[0.0], &[0.3], 1).unwrap();
        let mu = crate::kernel::reversible_measure(&k).unwrap();
        let basis = assemble_basis(&k, &mu).unwrap();
        let e = basis.eigenvalues();
        assert_eq!(e.len(), 3);
        assert!((e[0] - 1.0).abs() < 1e-15 && (e[1] - 0.7).abs() < 1e-15 && (e[2] - 0.7).abs() < 1e-15);
        let chain = lift_full(&k).unwrap();
        assert!(basis.check(&chain).passes(1e-8));
    }
}
