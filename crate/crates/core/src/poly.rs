//! Universal bivariate eigen-polynomials `P_d`, the univariate family `H_d`
//! and classical Hahn polynomials, all with exact rational cores.
//!
//! `P_d` is the (unique up to scale) polynomial solution of
//!
//! ```text
//! X P(X+1, Y) + Y P(X, Y+1) = (X + Y + d) P(X, Y)
//! X P(X-1, Y) + Y P(X, Y-1) = (X + Y - d) P(X, Y)
//! ```
//!
//! Its normalizing constant is irrational, so every polynomial here is a
//! [`ScaledPoly`]: `sign * sqrt(scale_sq) * core` with a rational `core`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::exact::{binom, det_rational, factorial, int, pochhammer, rat, scaled_sqrt_to_f64};

/// Exact polynomial in `X` and `Y`, keyed by exponent pair. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct BivariatePoly {
    terms: BTreeMap<(u32, u32), BigRational>,
}

impl BivariatePoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: BigRational) -> Self {
        Self::monomial(0, 0, c)
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn x() -> Self {
        Self::monomial(1, 0, BigRational::one())
    }

    pub fn y() -> Self {
        Self::monomial(0, 1, BigRational::one())
    }

    pub fn monomial(i: u32, j: u32, c: BigRational) -> Self {
        let mut p = Self::zero();
        p.add_term(i, j, c);
        p
    }

    /// `a + bx X + by Y`.
    pub fn linear(a: BigRational, bx: BigRational, by: BigRational) -> Self {
        let mut p = Self::zero();
        p.add_term(0, 0, a);
        p.add_term(1, 0, bx);
        p.add_term(0, 1, by);
        p
    }

    fn add_term(&mut self, i: u32, j: u32, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry((i, j)).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&(i, j));
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, i: u32, j: u32) -> BigRational {
        self.terms.get(&(i, j)).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &BigRational)> {
        self.terms.iter()
    }

    /// Total degree, `None` for the zero polynomial.
    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|&(i, j)| i + j).max()
    }

    /// The homogeneous component `[P]_deg`.
    pub fn homogeneous(&self, deg: u32) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|((i, j), _)| i + j == deg)
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(k, v)| (*k, v * c)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::one(), |acc, _| &acc * self)
    }

    /// Rising factorial `(L)_m = L (L+1) ... (L+m-1)` of this polynomial.
    pub fn rising(&self, m: u32) -> Self {
        let mut acc = Self::one();
        for t in 0..m {
            acc = &acc * &(self + &Self::constant(int(t as i64)));
        }
        acc
    }

    /// `P(X + a, Y + b)`.
    pub fn shift(&self, a: i64, b: i64) -> Self {
        let mut out = Self::zero();
        for (&(i, j), c) in &self.terms {
            for r in 0..=i {
                let cx = BigRational::from_integer(binom(i as i64, r as i64) * BigInt::from(a).pow(i - r));
                if cx.is_zero() {
                    continue;
                }
                for s in 0..=j {
                    let cy = BigRational::from_integer(binom(j as i64, s as i64) * BigInt::from(b).pow(j - s));
                    if cy.is_zero() {
                        continue;
                    }
                    out.add_term(r, s, c * &cx * cy);
                }
            }
        }
        out
    }

    /// `P(Y, X)`.
    pub fn swap(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|(&(i, j), v)| ((j, i), v.clone())).collect(),
        }
    }

    /// `P(-X, -Y)`.
    pub fn reflect(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(&(i, j), v)| ((i, j), if (i + j) % 2 == 1 { -v } else { v.clone() }))
                .collect(),
        }
    }

    pub fn eval(&self, x: &BigRational, y: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for (&(i, j), c) in &self.terms {
            acc += c * num_traits::pow(x.clone(), i as usize) * num_traits::pow(y.clone(), j as usize);
        }
        acc
    }

    pub fn eval_int(&self, i: i64, j: i64) -> BigRational {
        self.eval(&int(i), &int(j))
    }

    /// `P(X, X)` as a univariate polynomial; it vanishes iff `X - Y` divides `P`.
    pub fn on_diagonal(&self) -> UnivariatePoly {
        let mut coeffs = vec![BigRational::zero(); self.total_degree().map_or(0, |d| d as usize + 1)];
        for (&(i, j), c) in &self.terms {
            coeffs[(i + j) as usize] += c;
        }
        UnivariatePoly::new(coeffs)
    }

    pub fn divisible_by_x(&self) -> bool {
        self.terms.keys().all(|&(i, _)| i >= 1)
    }

    pub fn divisible_by_y(&self) -> bool {
        self.terms.keys().all(|&(_, j)| j >= 1)
    }

    pub fn divisible_by_x_minus_y(&self) -> bool {
        self.on_diagonal().is_zero()
    }

    /// Substitute `X = ax(w)`, `Y = ay(w)` for univariate `ax`, `ay`.
    pub fn compose_univariate(&self, ax: &UnivariatePoly, ay: &UnivariatePoly) -> UnivariatePoly {
        let mut acc = UnivariatePoly::zero();
        for (&(i, j), c) in &self.terms {
            let term = &ax.pow(i) * &ay.pow(j);
            acc = &acc + &term.scale(c);
        }
        acc
    }

    /// Positive rational `g` such that `self / g` has coprime integer coefficients.
    pub fn content(&self) -> BigRational {
        let mut num = BigInt::zero();
        let mut den = BigInt::one();
        for c in self.terms.values() {
            num = num.gcd(c.numer());
            den = den.lcm(c.denom());
        }
        if num.is_zero() {
            return BigRational::one();
        }
        BigRational::new(num, den)
    }

    /// Coefficient of the leading monomial: highest total degree, then highest `X` power.
    pub fn leading_coeff(&self) -> Option<&BigRational> {
        self.terms.iter().max_by_key(|((i, j), _)| (i + j, *i)).map(|(_, c)| c)
    }
}

impl Add for &BivariatePoly {
    type Output = BivariatePoly;
    fn add(self, rhs: &BivariatePoly) -> BivariatePoly {
        let mut out = self.clone();
        for (&(i, j), c) in &rhs.terms {
            out.add_term(i, j, c.clone());
        }
        out
    }
}

impl Sub for &BivariatePoly {
    type Output = BivariatePoly;
    fn sub(self, rhs: &BivariatePoly) -> BivariatePoly {
        let mut out = self.clone();
        for (&(i, j), c) in &rhs.terms {
            out.add_term(i, j, -c.clone());
        }
        out
    }
}

impl Mul for &BivariatePoly {
    type Output = BivariatePoly;
    fn mul(self, rhs: &BivariatePoly) -> BivariatePoly {
        let mut out = BivariatePoly::zero();
        for (&(i1, j1), c1) in &self.terms {
            for (&(i2, j2), c2) in &rhs.terms {
                out.add_term(i1 + i2, j1 + j2, c1 * c2);
            }
        }
        out
    }
}

impl Neg for &BivariatePoly {
    type Output = BivariatePoly;
    fn neg(self) -> BivariatePoly {
        self.scale(&-BigRational::one())
    }
}

impl fmt::Display for BivariatePoly {
    /// Terms as `(i,j):c`, by descending total degree then descending `X` power.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut keys: Vec<_> = self.terms.keys().copied().collect();
        keys.sort_by_key(|&(i, j)| std::cmp::Reverse((i + j, i)));
        let parts: Vec<String> = keys
            .iter()
            .map(|&(i, j)| format!("({i},{j}):{}", self.terms[&(i, j)]))
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Exact univariate polynomial, coefficients by ascending degree, trailing zeros trimmed.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct UnivariatePoly {
    coeffs: Vec<BigRational>,
}

impl UnivariatePoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: BigRational) -> Self {
        Self::new(vec![c])
    }

    /// `a + b x`.
    pub fn linear(a: BigRational, b: BigRational) -> Self {
        Self::new(vec![a, b])
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        Self::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::constant(BigRational::one()), |acc, _| &acc * self)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * int(k as i64))
                .collect(),
        )
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.coeffs.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_int(&self, x: i64) -> BigRational {
        self.eval(&int(x))
    }

    /// `p(-x)`.
    pub fn reflect(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| if k % 2 == 1 { -c } else { c.clone() })
                .collect(),
        )
    }

    /// Euclidean division; `None` when dividing by zero.
    pub fn div_rem(&self, divisor: &Self) -> Option<(Self, Self)> {
        let dd = divisor.degree()?;
        let lead = divisor.coeffs[dd].clone();
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return Some((Self::zero(), self.clone()));
        }
        let mut quot = vec![BigRational::zero(); rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let c = &rem[k + dd] / &lead;
            for (t, dc) in divisor.coeffs.iter().enumerate() {
                rem[k + t] -= &c * dc;
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        Some((Self::new(quot), Self::new(rem)))
    }
}

impl Add for &UnivariatePoly {
    type Output = UnivariatePoly;
    fn add(self, rhs: &UnivariatePoly) -> UnivariatePoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let z = BigRational::zero();
        UnivariatePoly::new(
            (0..n)
                .map(|k| self.coeffs.get(k).unwrap_or(&z) + rhs.coeffs.get(k).unwrap_or(&z))
                .collect(),
        )
    }
}

impl Sub for &UnivariatePoly {
    type Output = UnivariatePoly;
    fn sub(self, rhs: &UnivariatePoly) -> UnivariatePoly {
        self + &rhs.scale(&-BigRational::one())
    }
}

impl Mul for &UnivariatePoly {
    type Output = UnivariatePoly;
    fn mul(self, rhs: &UnivariatePoly) -> UnivariatePoly {
        if self.is_zero() || rhs.is_zero() {
            return UnivariatePoly::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (a, ca) in self.coeffs.iter().enumerate() {
            for (b, cb) in rhs.coeffs.iter().enumerate() {
                out[a + b] += ca * cb;
            }
        }
        UnivariatePoly::new(out)
    }
}

/// `sign * sqrt(scale_sq) * core`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaledPoly {
    pub core: BivariatePoly,
    pub scale_sq: BigRational,
    pub sign: i8,
}

impl ScaledPoly {
    pub fn rational(core: BivariatePoly) -> Self {
        Self {
            core,
            scale_sq: BigRational::one(),
            sign: 1,
        }
    }

    /// Exact value of the rational core at an integer point.
    pub fn core_value(&self, i: i64, j: i64) -> BigRational {
        self.core.eval_int(i, j)
    }

    pub fn eval(&self, i: i64, j: i64) -> f64 {
        scaled_sqrt_to_f64(self.sign, &self.scale_sq, &self.core_value(i, j))
    }

    /// Representation-independent equality of the represented real polynomials.
    pub fn same_polynomial(&self, other: &ScaledPoly) -> bool {
        match (self.core.terms.iter().next(), other.core.is_zero()) {
            (None, true) => true,
            (None, false) | (Some(_), true) => false,
            (Some((&(i, j), c1)), false) => {
                let lambda = other.core.coeff(i, j) / c1;
                if lambda.is_zero() || self.core.scale(&lambda) != other.core {
                    return false;
                }
                // s1 sqrt(q1) c1 = s2 sqrt(q2) lambda c1
                let lambda_sign: i8 = if lambda.is_negative() { -1 } else { 1 };
                self.scale_sq == &other.scale_sq * &lambda * &lambda && self.sign == other.sign * lambda_sign
            }
        }
    }

    /// Primitive integer core with a positive leading coefficient; the content moves into the scale.
    pub fn canonical(&self) -> Self {
        if self.core.is_zero() {
            return self.clone();
        }
        let g = self.core.content();
        let mut core = self.core.scale(&g.recip());
        let mut sign = self.sign;
        if core.leading_coeff().is_some_and(|c| c.is_negative()) {
            core = -&core;
            sign = -sign;
        }
        Self {
            core,
            scale_sq: &self.scale_sq * &g * &g,
            sign,
        }
    }

    /// `sign * sqrt(scale_sq) * core(i, j)` where the coefficient is exact up to the radical.
    pub fn coeff_squared_signed(&self, i: u32, j: u32) -> (i8, BigRational) {
        let c = self.core.coeff(i, j);
        let s = if c.is_negative() { -self.sign } else { self.sign };
        (s, &self.scale_sq * &c * &c)
    }
}

impl fmt::Display for ScaledPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.sign < 0 { "-" } else { "" };
        write!(f, "{sign}sqrt({}) * {}", self.scale_sq, self.core)
    }
}

/// `sign * sqrt(scale_sq) * core` for a univariate core.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaledUnivariate {
    pub core: UnivariatePoly,
    pub scale_sq: BigRational,
    pub sign: i8,
}

impl ScaledUnivariate {
    pub fn eval(&self, x: &BigRational) -> f64 {
        scaled_sqrt_to_f64(self.sign, &self.scale_sq, &self.core.eval(x))
    }
}

/// Which of the two degree-one solutions to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DegreeOne {
    /// `P_1 = X`, the default member used for lifting.
    #[default]
    First,
    /// `P_1 = Y`.
    Second,
}

/// Constant `C_d^2 = 4 (2d - 1) / (d (d - 1))` of the explicit formula, for `d >= 2`.
pub fn normalizing_constant_sq(d: u32) -> BigRational {
    assert!(d >= 2, "normalizing constant defined for d >= 2");
    let d = d as i64;
    rat(4 * (2 * d - 1), d * (d - 1))
}

/// Raw hypergeometric form `C_d (-X-Y)_d sum_k (-d)_k (d-1)_k / ((k-1)! k!) (-X)_k / (-X-Y)_k`.
///
/// The quotient `(-X-Y)_d / (-X-Y)_k` is expanded as the rising factorial
/// `(-X-Y+k)_{d-k}`, so the core is computed without any rational functions.
pub fn explicit_form(d: u32) -> ScaledPoly {
    assert!(d >= 2, "explicit formula holds for d >= 2");
    let neg_x = BivariatePoly::monomial(1, 0, -BigRational::one());
    let mut core = BivariatePoly::zero();
    for k in 1..=d {
        let c = pochhammer(&int(-(d as i64)), k) * pochhammer(&int(d as i64 - 1), k)
            / BigRational::from_integer(factorial(k - 1) * factorial(k));
        if c.is_zero() {
            continue;
        }
        let tail = BivariatePoly::linear(int(k as i64), -BigRational::one(), -BigRational::one());
        let term = &neg_x.rising(k) * &tail.rising(d - k);
        core = &core + &term.scale(&c);
    }
    let sign = if d % 2 == 1 { 1 } else { -1 };
    ScaledPoly {
        core,
        scale_sq: normalizing_constant_sq(d),
        sign,
    }
}

/// The universal polynomial `P_d` in canonical form (`P_1 = X`).
pub fn build_p(d: u32) -> ScaledPoly {
    match d {
        0 => ScaledPoly::rational(BivariatePoly::one()),
        1 => build_p1(DegreeOne::First),
        _ => explicit_form(d).canonical(),
    }
}

pub fn build_p1(which: DegreeOne) -> ScaledPoly {
    match which {
        DegreeOne::First => ScaledPoly::rational(BivariatePoly::x()),
        DegreeOne::Second => ScaledPoly::rational(BivariatePoly::y()),
    }
}

/// Memoized `P_0 ..= P_max` for repeated point evaluation.
#[derive(Clone, Debug)]
pub struct PolyFamily {
    polys: Vec<ScaledPoly>,
}

impl PolyFamily {
    pub fn up_to(max_degree: u32) -> Self {
        Self {
            polys: (0..=max_degree).map(build_p).collect(),
        }
    }

    pub fn get(&self, d: u32) -> &ScaledPoly {
        &self.polys[d as usize]
    }

    pub fn max_degree(&self) -> u32 {
        self.polys.len() as u32 - 1
    }

    pub fn eval(&self, d: u32, i: i64, j: i64) -> f64 {
        self.polys[d as usize].eval(i, j)
    }
}

pub fn eval_p(d: u32, i: i64, j: i64) -> f64 {
    build_p(d).eval(i, j)
}

/// `H_d(w) = [P_d]_d((1+w)/2, (1-w)/2)`, the top homogeneous part of `P_d` on the simplex line.
pub fn hahn_h(d: u32) -> ScaledUnivariate {
    assert!(d >= 2, "H_d is defined for d >= 2");
    let p = build_p(d);
    let top = p.core.homogeneous(d);
    let half = rat(1, 2);
    let ax = UnivariatePoly::linear(half.clone(), half.clone());
    let ay = UnivariatePoly::linear(half.clone(), -half);
    ScaledUnivariate {
        core: top.compose_univariate(&ax, &ay),
        scale_sq: p.scale_sq,
        sign: p.sign,
    }
}

/// `(1 - x^2) h'' + d (d - 1) h`, identically zero for `h = H_d`.
pub fn gegenbauer_limit_residual(h: &UnivariatePoly, d: u32) -> UnivariatePoly {
    let one_minus_x2 = UnivariatePoly::new(vec![int(1), int(0), int(-1)]);
    let lhs = &one_minus_x2 * &h.derivative().derivative();
    &lhs + &h.scale(&int(d as i64 * (d as i64 - 1)))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("Pochhammer denominator vanishes at term k={k} before the series terminates")]
pub struct PoleError {
    pub k: u32,
}

/// Hahn polynomial `Q_n(x; alpha, beta, N) = 3F2(-n, -x, n+alpha+beta+1; alpha+1, -N+1; 1)`.
pub fn hahn_q(
    n: u32,
    alpha: &BigRational,
    beta: &BigRational,
    big_n: i64,
    x: &BigRational,
) -> Result<BigRational, PoleError> {
    let upper_c = int(n as i64) + alpha + beta + int(1);
    let lower_a = alpha + int(1);
    let lower_b = int(1 - big_n);
    let mut acc = BigRational::one();
    let mut term = BigRational::one();
    for k in 1..=n {
        let step = k as i64 - 1;
        let numer = (int(step) - int(n as i64)) * (int(step) - x) * (&upper_c + int(step));
        if numer.is_zero() {
            break;
        }
        let denom = (&lower_a + int(step)) * (&lower_b + int(step)) * int(k as i64);
        if denom.is_zero() {
            return Err(PoleError { k });
        }
        term = term * numer / denom;
        acc += &term;
    }
    Ok(acc)
}

/// `Q_n(x; alpha, beta, N)` as a polynomial in `x`.
pub fn hahn_q_poly(n: u32, alpha: &BigRational, beta: &BigRational, big_n: i64) -> Result<UnivariatePoly, PoleError> {
    let upper_c = int(n as i64) + alpha + beta + int(1);
    let lower_a = alpha + int(1);
    let lower_b = int(1 - big_n);
    let mut acc = UnivariatePoly::constant(int(1));
    let mut coef = BigRational::one();
    // (-x)_k as a polynomial in x
    let mut neg_x_rising = UnivariatePoly::constant(int(1));
    for k in 1..=n {
        let step = k as i64 - 1;
        let numer = (int(step) - int(n as i64)) * (&upper_c + int(step));
        if numer.is_zero() {
            break;
        }
        let denom = (&lower_a + int(step)) * (&lower_b + int(step)) * int(k as i64);
        if denom.is_zero() {
            return Err(PoleError { k });
        }
        coef = coef * numer / denom;
        neg_x_rising = &neg_x_rising * &UnivariatePoly::linear(int(step), int(-1));
        acc = &acc + &neg_x_rising.scale(&coef);
    }
    Ok(acc)
}

/// Exact value `rational * sqrt(scale_sq)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RadicalValue {
    pub rational: BigRational,
    pub scale_sq: BigRational,
}

impl RadicalValue {
    pub fn to_f64(&self) -> f64 {
        scaled_sqrt_to_f64(1, &self.scale_sq, &self.rational)
    }
}

/// `sum_{i=1}^{k-1} P_d(i, k-i) P_d2(i, k-i) / (i (k-i))`, exactly.
pub fn orthogonality_sum_exact(d: u32, d2: u32, k: u32) -> RadicalValue {
    orthogonality_sum_with(&build_p(d), &build_p(d2), k)
}

pub fn orthogonality_sum_with(p: &ScaledPoly, p2: &ScaledPoly, k: u32) -> RadicalValue {
    let k = k as i64;
    let mut acc = BigRational::zero();
    for i in 1..k {
        let a = p.core_value(i, k - i);
        let b = p2.core_value(i, k - i);
        acc += a * b / int(i * (k - i));
    }
    let sign = i64::from(p.sign * p2.sign);
    RadicalValue {
        rational: acc * int(sign),
        scale_sq: &p.scale_sq * &p2.scale_sq,
    }
}

pub fn orthogonality_sum(d: u32, d2: u32, k: u32) -> f64 {
    orthogonality_sum_exact(d, d2, k).to_f64()
}

/// Cores of the collocation matrix `(P_i(j, d-j))_{0 <= i, j <= d}` (with `P_1 = X`);
/// the scales are nonzero, so invertibility is decided by this rational determinant.
pub fn collocation_determinant(d: u32) -> BigRational {
    let m = (0..=d)
        .map(|i| {
            let p = build_p(i);
            (0..=d as i64).map(|j| p.core_value(j, d as i64 - j)).collect()
        })
        .collect();
    det_rational(m)
}
