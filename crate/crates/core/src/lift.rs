//! The two-dimensional neutral chain built from a one-dimensional kernel, its
//! blocks `Π_d`, reversible measures, sub-triangle restrictions and truncations.
//!
//! From `(i, j)` with `s = i + j`, the lifted chain moves to `(i+k, j+l)` with probability
//!
//! ```text
//! C(i+k-1, k) C(j+l-1, l) / C(s+k+l-1, k+l) * p_{s, s+k+l}
//! ```
//!
//! and to `(i-k, j-l)` with probability `C(i, k) C(j, l) / C(s, k+l) * p_{s, s-k-l}`.
//! `C(-1, 0) = 1`, which keeps each axis closed.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::to_f64;
use crate::kernel::{KernelSpec, ReversibleMeasure};
use crate::linalg::Matrix;
use crate::par::{map_range, Execution};

/// Largest `N` accepted by the dense constructors.
pub const MAX_N: usize = 150;

/// Bijection between the triangle `{(i, j): i, j >= 0, i + j <= N}` and `0..size`,
/// ordered by `i` then `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TriIndex {
    n: usize,
    states: Vec<(usize, usize)>,
}

impl TriIndex {
    pub fn new(n: usize) -> Self {
        let states = (0..=n).flat_map(|i| (0..=n - i).map(move |j| (i, j))).collect();
        Self { n, states }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        (self.n + 1) * (self.n + 2) / 2
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i + j <= self.n);
        i * (self.n + 1) - i * i.saturating_sub(1) / 2 + j
    }

    pub fn try_index(&self, i: usize, j: usize) -> Option<usize> {
        (i + j <= self.n).then(|| self.index(i, j))
    }

    pub fn state(&self, idx: usize) -> (usize, usize) {
        self.states[idx]
    }

    pub fn states(&self) -> &[(usize, usize)] {
        &self.states
    }
}

/// Pascal table of exact binomials `C(n, k)` for `0 <= n <= max`.
struct Binomials {
    rows: Vec<Vec<BigInt>>,
}

impl Binomials {
    fn new(max: usize) -> Self {
        let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(max + 1);
        for n in 0..=max {
            let mut row = vec![BigInt::one(); n + 1];
            for k in 1..n {
                row[k] = &rows[n - 1][k - 1] + &rows[n - 1][k];
            }
            rows.push(row);
        }
        Self { rows }
    }

    fn get(&self, n: i64, k: i64) -> BigInt {
        if k < 0 {
            return BigInt::zero();
        }
        if k == 0 {
            return BigInt::one();
        }
        if n < 0 || k > n {
            return BigInt::zero();
        }
        self.rows[n as usize][k as usize].clone()
    }

    fn ratio(&self, num: &[(i64, i64)], den: (i64, i64)) -> f64 {
        let d = self.get(den.0, den.1);
        if d.is_zero() {
            return 0.0;
        }
        let n = num.iter().fold(BigInt::one(), |acc, &(a, b)| acc * self.get(a, b));
        if n.is_zero() {
            return 0.0;
        }
        to_f64(&BigRational::new(n, d))
    }
}

/// Dense transition matrix of the lifted chain on the triangle.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedChain {
    pub index: TriIndex,
    pub pi: Matrix,
}

impl LiftedChain {
    pub fn n(&self) -> usize {
        self.index.n()
    }

    pub fn p(&self, from: (usize, usize), to: (usize, usize)) -> f64 {
        self.pi[(self.index.index(from.0, from.1), self.index.index(to.0, to.1))]
    }
}

fn check_envelope(n: usize) -> Result<()> {
    if n > MAX_N {
        return Err(Error::Validation(format!(
            "N = {n} exceeds the supported dense envelope N <= {MAX_N}"
        )));
    }
    Ok(())
}

pub fn lift_full(spec: &KernelSpec) -> Result<LiftedChain> {
    lift_full_with(spec, Execution::default())
}

pub fn lift_full_with(spec: &KernelSpec, exec: Execution) -> Result<LiftedChain> {
    let n = spec.n();
    check_envelope(n)?;
    let index = TriIndex::new(n);
    let binom = Binomials::new(2 * n + 1);
    let size = index.size();
    let rows = map_range(exec, size, |r| lifted_row(spec, &index, &binom, r));
    Ok(LiftedChain {
        pi: Matrix::from_vec(size, size, rows.concat()),
        index,
    })
}

fn lifted_row(spec: &KernelSpec, index: &TriIndex, binom: &Binomials, r: usize) -> Vec<f64> {
    let n = index.n();
    let mut row = vec![0.0; index.size()];
    let (i, j) = index.state(r);
    let s = i + j;
    if s == 0 {
        row[r] = 1.0;
        return row;
    }
    row[r] = spec.p(s, s);
    let (ii, jj, ss) = (i as i64, j as i64, s as i64);
    for m in (s + 1)..=n {
        let p = spec.p(s, m);
        if p == 0.0 {
            continue;
        }
        let total = (m - s) as i64;
        for k in 0..=total {
            let l = total - k;
            let c = binom.ratio(&[(ii + k - 1, k), (jj + l - 1, l)], (ss + total - 1, total));
            if c != 0.0 {
                row[index.index(i + k as usize, j + l as usize)] = c * p;
            }
        }
    }
    for m in 0..s {
        let p = spec.p(s, m);
        if p == 0.0 {
            continue;
        }
        let total = (s - m) as i64;
        for k in 0..=total.min(ii) {
            let l = total - k;
            if l > jj {
                continue;
            }
            let c = binom.ratio(&[(ii, k), (jj, l)], (ss, total));
            if c != 0.0 {
                row[index.index(i - k as usize, j - l as usize)] = c * p;
            }
        }
    }
    row
}

/// `Π_d` on `{d..N}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockMatrix {
    pub d: usize,
    pub n: usize,
    /// Row/column `t` is population `d + t`.
    pub matrix: Matrix,
}

impl BlockMatrix {
    pub fn p(&self, from: usize, to: usize) -> f64 {
        self.matrix[(from - self.d, to - self.d)]
    }

    pub fn populations(&self) -> std::ops::RangeInclusive<usize> {
        self.d..=self.n
    }
}

/// `Π_d`; for `d = 0` this is `Π₀` itself and for `d = 1` it reduces to `(m/n) p_{n,m}`.
pub fn lift_block(spec: &KernelSpec, d: usize) -> Result<BlockMatrix> {
    let n = spec.n();
    check_envelope(n)?;
    if d > n {
        return Err(Error::Validation(format!("block degree d = {d} exceeds N = {n}")));
    }
    if d == 0 {
        return Ok(BlockMatrix {
            d,
            n,
            matrix: spec.matrix().clone(),
        });
    }
    let binom = Binomials::new(2 * n + 1);
    let size = n - d + 1;
    let dd = d as i64;
    let mut m = Matrix::zeros(size, size);
    for a in d..=n {
        for b in d..=n {
            let p = spec.p(a, b);
            if p == 0.0 {
                continue;
            }
            let (ai, bi) = (a as i64, b as i64);
            let c = if b > a {
                binom.ratio(&[(bi + dd - 1, bi - ai)], (bi - 1, bi - ai))
            } else if b < a {
                binom.ratio(&[(ai - dd, ai - bi)], (ai, ai - bi))
            } else {
                1.0
            };
            m[(a - d, b - d)] = c * p;
        }
    }
    Ok(BlockMatrix { d, n, matrix: m })
}

/// `ν(i, j) = (i + j) μ_{i+j} / (i j)` on the interior states, in [`interior_states`] order.
pub fn nu_measure(mu: &ReversibleMeasure, n: usize) -> Vec<f64> {
    interior_states(n)
        .into_iter()
        .map(|(i, j)| (i + j) as f64 * mu.at(i + j) / (i * j) as f64)
        .collect()
}

/// `μ^(d)_n = 2 n C(n + d - 1, 2d - 1) μ_n` on `{d..N}`; for `d = 0` this is `μ` on `{1..N}`.
pub fn mu_d(mu: &ReversibleMeasure, d: usize) -> Vec<f64> {
    let n = mu.n();
    if d == 0 {
        return mu.weights().to_vec();
    }
    let binom = Binomials::new(2 * n + 1);
    (d..=n)
        .map(|m| {
            let c = binom.ratio(&[(m as i64 + d as i64 - 1, 2 * d as i64 - 1)], (0, 0));
            2.0 * m as f64 * c * mu.at(m)
        })
        .collect()
}

/// Interior states `i, j >= 1`, ordered by `i` then `j`.
pub fn interior_states(n: usize) -> Vec<(usize, usize)> {
    (1..n).flat_map(|i| (1..=n - i).map(move |j| (i, j))).collect()
}

/// `S*_k`: for `k = 1` all states with `i >= 1`; for `k >= 2` interior states with `i + j >= k`.
pub fn s_star(n: usize, k: usize) -> Vec<(usize, usize)> {
    let index = TriIndex::new(n);
    index
        .states()
        .iter()
        .copied()
        .filter(|&(i, j)| if k <= 1 { i >= 1 } else { i >= 1 && j >= 1 && i + j >= k })
        .collect()
}

/// Principal submatrix of `Π` on `S*_k`, with its states.
pub fn restrict_k(chain: &LiftedChain, k: usize) -> (Vec<(usize, usize)>, Matrix) {
    let states = s_star(chain.n(), k);
    let idx: Vec<usize> = states.iter().map(|&(i, j)| chain.index.index(i, j)).collect();
    (states, chain.pi.submatrix(&idx))
}

/// A kernel truncated above `N'`.
#[derive(Clone, Debug, PartialEq)]
pub struct Truncation {
    pub n_prime: usize,
    /// `Pr Π̃₀ Pr` on `{1..N}`: rows and columns above `N'` zeroed (substochastic).
    pub interior: Matrix,
    /// Markovian extension: lost mass goes to state 0.
    pub extended: KernelSpec,
}

pub fn truncate(spec: &KernelSpec, n_prime: usize) -> Result<Truncation> {
    let n = spec.n();
    if n_prime < 1 || n_prime > n {
        return Err(Error::Validation(format!("truncation level {n_prime} outside 1..={n}")));
    }
    let mut m = spec.matrix().clone();
    for a in 1..=n {
        for b in 1..=n {
            if a > n_prime || b > n_prime {
                m[(a, b)] = 0.0;
            }
        }
        if a > n_prime {
            m[(a, 0)] = 0.0;
        }
    }
    let interior = m.submatrix(&(1..=n).collect::<Vec<_>>());
    for a in 1..=n {
        let lost = 1.0 - m.row(a).iter().sum::<f64>();
        m[(a, 0)] += lost;
    }
    // rounding can leave |lost| ~ 1e-17 negative on untouched rows
    for a in 1..=n {
        if m[(a, 0)] < 0.0 {
            m[(a, 0)] = 0.0;
        }
    }
    Ok(Truncation {
        n_prime,
        interior,
        extended: KernelSpec::from_matrix(m)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{random_kernel, reversible_measure};

    #[test]
    fn tri_index_round_trip() {
        for n in 0..8 {
            let t = TriIndex::new(n);
            assert_eq!(t.states().len(), t.size());
            for (k, &(i, j)) in t.states().iter().enumerate() {
                assert_eq!(t.index(i, j), k);
            }
        }
    }

    fn bd() -> KernelSpec {
        KernelSpec::birth_death(&[0.3, 0.2, 0.25, 0.0], &[0.1, 0.2, 0.3, 0.4], 4).unwrap()
    }

    #[test]
    fn lifted_entries() {
        let k = random_kernel(3, 5, 0.2);
        let c = lift_full(&k).unwrap();
        assert!((c.p((1, 1), (2, 2)) - k.p(2, 4) / 3.0).abs() < 1e-16);
        assert_eq!(c.p((1, 0), (2, 0)), k.p(1, 2));
        assert_eq!(c.p((1, 0), (1, 1)), 0.0);
        assert!((c.p((2, 1), (1, 1)) - 2.0 / 3.0 * k.p(3, 2)).abs() < 1e-16);
        for s in c.pi.row_sums() {
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn block_entries() {
        let k = random_kernel(5, 5, 0.2);
        let b1 = lift_block(&k, 1).unwrap();
        assert!((b1.p(2, 3) - 1.5 * k.p(2, 3)).abs() < 1e-16);
        let b2 = lift_block(&k, 2).unwrap();
        assert!((b2.p(2, 3) - 2.0 * k.p(2, 3)).abs() < 1e-16);
        assert!((b2.p(3, 2) - k.p(3, 2) / 3.0).abs() < 1e-16);
    }

    #[test]
    fn measures() {
        let k = bd();
        let mu = reversible_measure(&k).unwrap();
        let m1 = mu_d(&mu, 1);
        assert!((m1[2] - 2.0 * 9.0 * mu.at(3)).abs() < 1e-12);
        let m2 = mu_d(&mu, 2);
        assert!((m2[1] - 24.0 * mu.at(3)).abs() < 1e-12);
        let nu = nu_measure(&mu, 4);
        assert_eq!(interior_states(4)[0], (1, 1));
        assert!((nu[0] - 2.0 * mu.at(2)).abs() < 1e-15);
    }

    #[test]
    fn restriction_sizes() {
        let c = lift_full(&bd()).unwrap();
        assert_eq!(restrict_k(&c, 2).0.len(), 4 * 3 / 2);
        let (states, top) = restrict_k(&c, 4);
        assert_eq!(states.len(), 3);
        for a in 0..3 {
            for b in 0..3 {
                let expect = if a == b { bd().p(4, 4) } else { 0.0 };
                assert!((top[(a, b)] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn truncation_zeroes_rows() {
        let k = random_kernel(1, 6, 0.3);
        let t = truncate(&k, 4).unwrap();
        assert!(t.interior.row(5).iter().all(|&v| v == 0.0));
        assert_eq!(t.extended.p(6, 0), 1.0);
        let same = truncate(&k, 6).unwrap();
        assert_eq!(same.interior, k.interior());
    }
}
