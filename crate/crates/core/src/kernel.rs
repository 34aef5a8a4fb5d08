//! One-dimensional kernels `Π₀` on `{0..N}` with 0 absorbing, and their reversible measures.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::SplitMix;

const ROW_SUM_TOL: f64 = 1e-12;
const BALANCE_TOL: f64 = 1e-10;

/// A validated row-stochastic kernel on `{0..N}` with `p_{0,0} = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec {
    n: usize,
    rows: Matrix,
}

impl KernelSpec {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        if size < 2 {
            return Err(Error::Validation(format!("kernel needs at least 2 states, got {size}")));
        }
        if let Some((r, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != size) {
            return Err(Error::Validation(format!(
                "matrix not square: row {r} has {} entries, expected {size}",
                row.len()
            )));
        }
        Self::from_matrix(Matrix::from_rows(&rows))
    }

    pub fn from_matrix(m: Matrix) -> Result<Self> {
        if !m.is_square() || m.rows() < 2 {
            return Err(Error::Validation(format!(
                "kernel must be square with at least 2 states, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let size = m.rows();
        for r in 0..size {
            for c in 0..size {
                let v = m[(r, c)];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Validation(format!("entry ({r}, {c}) = {v} outside [0, 1]")));
                }
            }
        }
        if m[(0, 0)] != 1.0 {
            return Err(Error::Validation("state 0 not absorbing".into()));
        }
        for (r, s) in m.row_sums().into_iter().enumerate() {
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Validation(format!("row {r} sums to {}", short(s))));
            }
        }
        Ok(Self { n: size - 1, rows: m })
    }

    /// Tridiagonal kernel with `p_{k,k+1} = p[k-1]`, `p_{k,k-1} = q[k-1]` for `k = 1..=N`.
    pub fn birth_death(p: &[f64], q: &[f64], n: usize) -> Result<Self> {
        if n < 1 || p.len() != n || q.len() != n {
            return Err(Error::Validation(format!(
                "birth_death needs N >= 1 and N birth and death probabilities, got N={n}, |p|={}, |q|={}",
                p.len(),
                q.len()
            )));
        }
        let mut m = Matrix::zeros(n + 1, n + 1);
        m[(0, 0)] = 1.0;
        for k in 1..=n {
            let (pk, qk) = (p[k - 1], q[k - 1]);
            if pk < 0.0 || qk < 0.0 || !pk.is_finite() || !qk.is_finite() {
                return Err(Error::Validation(format!(
                    "negative probability at k={k}: p={pk}, q={qk}"
                )));
            }
            if pk + qk > 1.0 + ROW_SUM_TOL {
                return Err(Error::Validation(format!("p_{k} + q_{k} = {} exceeds 1", pk + qk)));
            }
            if k == n && pk != 0.0 {
                return Err(Error::Validation(format!("p_N must be 0, got {pk}")));
            }
            m[(k, k - 1)] = qk;
            m[(k, k)] = (1.0 - (pk + qk)).max(0.0);
            if k < n {
                m[(k, k + 1)] = pk;
            }
        }
        Self::from_matrix(m)
    }

    /// Largest population `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self, from: usize, to: usize) -> f64 {
        self.rows[(from, to)]
    }

    pub fn matrix(&self) -> &Matrix {
        &self.rows
    }

    /// `Π̃₀`: the kernel restricted to `{1..N}` (substochastic).
    pub fn interior(&self) -> Matrix {
        let idx: Vec<usize> = (1..=self.n).collect();
        self.rows.submatrix(&idx)
    }

    pub fn is_tridiagonal(&self) -> bool {
        (0..=self.n).all(|r| (0..=self.n).all(|c| r.abs_diff(c) <= 1 || self.rows[(r, c)] == 0.0))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows.to_rows()
    }
}

/// Positive weights on `{1..N}` in detailed balance with `Π̃₀`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReversibleMeasure {
    weights: Vec<f64>,
}

impl ReversibleMeasure {
    pub fn new(weights: Vec<f64>) -> Self {
        assert!(
            weights.iter().all(|w| *w > 0.0 && w.is_finite()),
            "weights must be positive"
        );
        Self { weights }
    }

    /// Weight of state `n`, `1 <= n <= N`.
    pub fn at(&self, n: usize) -> f64 {
        self.weights[n - 1]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }
}

/// Propagate detailed balance along a spanning forest of the transition graph, then check every pair.
pub fn reversible_measure(spec: &KernelSpec) -> Result<ReversibleMeasure> {
    let n = spec.n();
    let p = |a: usize, b: usize| spec.p(a + 1, b + 1);
    let mut mu = vec![0.0f64; n];
    for root in 0..n {
        if mu[root] > 0.0 {
            continue;
        }
        mu[root] = 1.0;
        let mut queue = VecDeque::from([root]);
        while let Some(a) = queue.pop_front() {
            for b in 0..n {
                if b == a || mu[b] > 0.0 {
                    continue;
                }
                let (pab, pba) = (p(a, b), p(b, a));
                if pab == 0.0 && pba == 0.0 {
                    continue;
                }
                if pab == 0.0 || pba == 0.0 {
                    return Err(Error::NotReversible {
                        i: a + 1,
                        j: b + 1,
                        defect: 1.0,
                    });
                }
                mu[b] = mu[a] * pab / pba;
                queue.push_back(b);
            }
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            let lhs = mu[a] * p(a, b);
            let rhs = mu[b] * p(b, a);
            let scale = lhs.abs().max(rhs.abs());
            if scale > 0.0 && (lhs - rhs).abs() > BALANCE_TOL * scale {
                return Err(Error::NotReversible {
                    i: a + 1,
                    j: b + 1,
                    defect: (lhs - rhs).abs() / scale,
                });
            }
        }
    }
    Ok(ReversibleMeasure::new(mu))
}

/// Seeded general kernel: irreducible interior (positive tridiagonal band plus random
/// long-range entries) and `p_{1,0} = absorption_mass`.
pub fn random_kernel(seed: u64, n: usize, absorption_mass: f64) -> KernelSpec {
    assert!(n >= 1 && absorption_mass > 0.0 && absorption_mass < 1.0);
    let mut rng = SplitMix::stream(seed, 0x6b65726e);
    let mut m = Matrix::zeros(n + 1, n + 1);
    m[(0, 0)] = 1.0;
    for r in 1..=n {
        let absorb = if r == 1 {
            absorption_mass
        } else if rng.next_f64() < 0.5 {
            absorption_mass * rng.next_f64() / n as f64
        } else {
            0.0
        };
        let mut w = vec![0.0; n + 1];
        for (c, wc) in w.iter_mut().enumerate().skip(1) {
            let band = r.abs_diff(c) <= 1;
            if band {
                *wc = 0.2 + rng.next_f64();
            } else if rng.next_f64() < 0.5 {
                *wc = rng.next_f64();
            }
        }
        let total: f64 = w.iter().sum();
        for c in 1..=n {
            m[(r, c)] = (1.0 - absorb) * w[c] / total;
        }
        m[(r, 0)] = absorb;
        renormalize_row(&mut m, r);
    }
    KernelSpec::from_matrix(m).expect("random kernel is valid by construction")
}

/// Seeded birth–death kernel with `p_k, q_k` in `[0.05, 0.45]` (so every `r_k >= 0.1`) and `p_N = 0`.
pub fn random_birth_death(seed: u64, n: usize) -> KernelSpec {
    let mut rng = SplitMix::stream(seed, 0x62697274);
    let mut p = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    for k in 1..=n {
        let pk = 0.05 + 0.4 * rng.next_f64();
        p.push(if k == n { 0.0 } else { pk });
        q.push(0.05 + 0.4 * rng.next_f64());
    }
    KernelSpec::birth_death(&p, &q, n).expect("random birth-death kernel is valid by construction")
}

/// Seeded reversible kernel with a dense interior: `p_{a,b} = c_{ab} / mu_a` for a symmetric `c`.
pub fn random_reversible(seed: u64, n: usize, absorption_mass: f64) -> KernelSpec {
    assert!(n >= 1 && absorption_mass > 0.0 && absorption_mass < 1.0);
    let mut rng = SplitMix::stream(seed, 0x72657665);
    let mu: Vec<f64> = (0..n).map(|_| 0.5 + rng.next_f64()).collect();
    let mut c = Matrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let v = if a.abs_diff(b) <= 1 || rng.next_f64() < 0.5 {
                0.1 + rng.next_f64()
            } else {
                0.0
            };
            c[(a, b)] = v;
            c[(b, a)] = v;
        }
    }
    let absorb: Vec<f64> = (0..n)
        .map(|a| {
            if a == 0 {
                absorption_mass
            } else {
                absorption_mass * rng.next_f64() / n as f64
            }
        })
        .collect();
    // scale so that every off-diagonal row mass fits, leaving room for a positive diagonal
    let lambda = (0..n)
        .map(|a| {
            let off: f64 = (0..n).filter(|&b| b != a).map(|b| c[(a, b)]).sum();
            if off == 0.0 {
                f64::INFINITY
            } else {
                0.9 * (1.0 - absorb[a]) * mu[a] / off
            }
        })
        .fold(f64::INFINITY, f64::min);
    let lambda = if lambda.is_finite() { lambda } else { 1.0 };
    let mut m = Matrix::zeros(n + 1, n + 1);
    m[(0, 0)] = 1.0;
    for a in 0..n {
        let mut off = 0.0;
        for b in 0..n {
            if a != b {
                let v = lambda * c[(a, b)] / mu[a];
                m[(a + 1, b + 1)] = v;
                off += v;
            }
        }
        m[(a + 1, 0)] = absorb[a];
        m[(a + 1, a + 1)] = 1.0 - absorb[a] - off;
    }
    KernelSpec::from_matrix(m).expect("random reversible kernel is valid by construction")
}

/// Up to 12 decimals, trailing zeros dropped.
fn short(x: f64) -> String {
    let s = format!("{x:.12}");
    let s = s.trim_end_matches('0');
    s.trim_end_matches('.').to_string()
}

/// Absorb rounding drift into the largest entry of the row.
fn renormalize_row(m: &mut Matrix, r: usize) {
    let s: f64 = m.row(r).iter().sum();
    let (c_max, _) = m.row(r).iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    m[(r, c_max)] += 1.0 - s;
}
