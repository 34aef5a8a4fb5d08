//! Maximal Dirichlet eigenvalues `θ^D_k` on `S*_k` against the block eigenvalues `θ^(d)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::lift::{lift_block, lift_full_with, restrict_k, LiftedChain};
use crate::linalg::irreducibility_witness;
use crate::par::{map_range, Execution};
use crate::spectral::spectral_radius;

/// Below this gap two values are reported equal.
pub const EQUAL_TOL: f64 = 1e-10;
/// Above this gap an inequality is reported strict.
pub const STRICT_TOL: f64 = 1e-8;
/// Slack allowed in the monotonicity checks.
pub const MONOTONE_SLACK: f64 = 1e-12;

pub fn theta_dirichlet(chain: &LiftedChain, k: usize) -> Result<f64> {
    let (states, m) = restrict_k(chain, k);
    if states.is_empty() {
        return Err(Error::EmptyDomain { k });
    }
    spectral_radius(&m)
}

pub fn theta_block(spec: &KernelSpec, d: usize) -> Result<f64> {
    spectral_radius(&lift_block(spec, d)?.matrix)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
    Indeterminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Equal,
    AtLeast,
    Strict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub relation: Relation,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`.
    pub margin: f64,
    pub verdict: Verdict,
}

impl Check {
    fn new(name: String, relation: Relation, lhs: f64, rhs: f64) -> Self {
        let margin = lhs - rhs;
        let verdict = match relation {
            Relation::Equal if margin.abs() < EQUAL_TOL => Verdict::Holds,
            Relation::Equal if margin.abs() > STRICT_TOL => Verdict::Violated,
            Relation::AtLeast if margin > -EQUAL_TOL => Verdict::Holds,
            Relation::AtLeast if margin < -STRICT_TOL => Verdict::Violated,
            Relation::Strict if margin > STRICT_TOL => Verdict::Holds,
            Relation::Strict if margin.abs() < EQUAL_TOL || margin < -STRICT_TOL => Verdict::Violated,
            _ => Verdict::Indeterminate,
        };
        Self {
            name,
            relation,
            lhs,
            rhs,
            margin,
            verdict,
        }
    }

    fn monotone(name: String, lhs: f64, rhs: f64) -> Self {
        let margin = lhs - rhs;
        let verdict = if margin >= -MONOTONE_SLACK {
            Verdict::Holds
        } else {
            Verdict::Violated
        };
        Self {
            name,
            relation: Relation::AtLeast,
            lhs,
            rhs,
            margin,
            verdict,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderingReport {
    pub n: usize,
    /// `θ^D_k` for `k = 1..=N`.
    pub theta_dirichlet: Vec<f64>,
    /// `θ^(d)` for `d = 0..=N`.
    pub theta_block: Vec<f64>,
    /// `irreducible[k-1]`: whether `Π₀` restricted to `{k..N}` is irreducible, `k = 1..=N`.
    pub irreducible: Vec<bool>,
    pub checks: Vec<Check>,
    /// Set when no strictness is claimed anywhere (the restricted kernels are all reducible).
    pub degenerate: bool,
}

impl OrderingReport {
    pub fn violations(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.verdict == Verdict::Violated).collect()
    }

    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.verdict == Verdict::Holds)
    }
}

pub fn ordering_report(spec: &KernelSpec) -> Result<OrderingReport> {
    ordering_report_with(spec, Execution::default())
}

pub fn ordering_report_with(spec: &KernelSpec, exec: Execution) -> Result<OrderingReport> {
    let n = spec.n();
    let chain = lift_full_with(spec, exec)?;
    let theta_d = map_range(exec, n, |k| theta_dirichlet(&chain, k + 1))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let theta_b = map_range(exec, n + 1, |d| theta_block(spec, d))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let irreducible: Vec<bool> = (1..=n)
        .map(|k| {
            let idx: Vec<usize> = (k..=n).collect();
            irreducibility_witness(&spec.matrix().submatrix(&idx)).is_none()
        })
        .collect();

    let mut checks = Vec::new();
    let td = |k: usize| theta_d[k - 1];
    let tb = |d: usize| theta_b[d];
    checks.push(Check::new("theta_D_1 = theta_1".into(), Relation::Equal, td(1), tb(1)));
    if n >= 2 {
        checks.push(Check::new("theta_D_2 = theta_2".into(), Relation::Equal, td(2), tb(2)));
    }
    for k in 3..=n {
        checks.push(Check::new(
            format!("theta_D_{k} >= theta_{k}"),
            Relation::AtLeast,
            td(k),
            tb(k),
        ));
    }
    for k in 1..n {
        checks.push(Check::monotone(
            format!("theta_D_{k} >= theta_D_{}", k + 1),
            td(k),
            td(k + 1),
        ));
    }
    for d in 0..n {
        checks.push(Check::monotone(
            format!("theta_{d} >= theta_{}", d + 1),
            tb(d),
            tb(d + 1),
        ));
    }
    checks.push(Check::new("theta_0 = 1".into(), Relation::Equal, tb(0), 1.0));
    checks.push(Check::new(
        format!("theta_{n} = p_NN"),
        Relation::Equal,
        tb(n),
        spec.p(n, n),
    ));
    for k in 1..n {
        if !irreducible[k - 1] {
            continue;
        }
        checks.push(Check::new(
            format!("theta_D_{k} > theta_D_{}", k + 1),
            Relation::Strict,
            td(k),
            td(k + 1),
        ));
        checks.push(Check::new(
            format!("theta_{k} > theta_{}", k + 1),
            Relation::Strict,
            tb(k),
            tb(k + 1),
        ));
        if k >= 3 {
            checks.push(Check::new(
                format!("theta_D_{k} > theta_{k}"),
                Relation::Strict,
                td(k),
                tb(k),
            ));
        }
    }
    if irreducible[0] && (1..=n).any(|i| spec.p(i, 0) > 0.0) {
        checks.push(Check::new("1 > theta_1".into(), Relation::Strict, 1.0, tb(1)));
    }
    let degenerate = !irreducible.iter().take(n.saturating_sub(1)).any(|&b| b);
    Ok(OrderingReport {
        n,
        theta_dirichlet: theta_d,
        theta_block: theta_b,
        irreducible,
        checks,
        degenerate,
    })
}
