//! Absorbed two-dimensional chains: block structure, Yaglom limits, quasi-stationary
//! distributions, the asymptotics of `R^(n)` and near-neutral perturbations.
//!
//! States other than `(0,0)` are split into axis 1 (`(1,0)..(N,0)`), axis 2
//! (`(0,1)..(0,N)`) and the interior. Restricted to them the transition matrix is
//!
//! ```text
//!     | Q1  0   0  |
//! Q = | 0   Q2  0  |
//!     | R1  R2  Q3 |
//! ```

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::lift::{interior_states, lift_full, LiftedChain, TriIndex};
use crate::linalg::{irreducibility_witness, period, Lu, Matrix};
use crate::par::{map_range, Execution};
use crate::rng::SplitMix;
use crate::spectral::{perron_pair, PerronPair, DEFAULT_TOL};

/// Relative gap below which two Perron roots are treated as equal.
pub const TIE_EQUAL: f64 = 1e-9;
/// Relative gap above which two Perron roots are treated as distinct.
pub const TIE_STRICT: f64 = 1e-7;
const ROW_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockHypotheses {
    /// For `Q1`, `Q2`, `Q3`.
    pub irreducible: [bool; 3],
    pub aperiodic: [bool; 3],
    pub r1_nonzero: bool,
    pub r2_nonzero: bool,
}

impl BlockHypotheses {
    pub fn all_hold(&self) -> bool {
        self.irreducible.iter().all(|&b| b) && self.aperiodic.iter().all(|&b| b) && self.r1_nonzero && self.r2_nonzero
    }

    fn first_failure(&self) -> Option<String> {
        let names = ["Q1", "Q2", "Q3"];
        for (k, name) in names.iter().enumerate() {
            if !self.irreducible[k] {
                return Some(format!("{name} is not irreducible"));
            }
            if !self.aperiodic[k] {
                return Some(format!("{name} is periodic"));
            }
        }
        if !self.r1_nonzero {
            return Some("R1 is zero".into());
        }
        if !self.r2_nonzero {
            return Some("R2 is zero".into());
        }
        None
    }
}

/// An absorbed two-dimensional chain with its blocks extracted.
#[derive(Clone, Debug, PartialEq)]
pub struct A2dmcSpec {
    pub index: TriIndex,
    pub pi: Matrix,
    pub interior: Vec<(usize, usize)>,
    pub q1: Matrix,
    pub q2: Matrix,
    pub q3: Matrix,
    /// Interior to axis 1, `|S*| x N`.
    pub r1: Matrix,
    pub r2: Matrix,
    /// Interior to `(0,0)`.
    pub r: Vec<f64>,
    pub hypotheses: BlockHypotheses,
}

fn block_ok(m: &Matrix) -> (bool, bool) {
    if m.rows() == 0 {
        return (false, false);
    }
    let irreducible = irreducibility_witness(m).is_none() && (m.rows() > 1 || m[(0, 0)] > 0.0);
    let aperiodic = irreducible && period(m) == 1;
    (irreducible, aperiodic)
}

pub fn extract_blocks(pi: &Matrix) -> Result<A2dmcSpec> {
    let size = pi.rows();
    if !pi.is_square() {
        return Err(Error::Structure(format!(
            "matrix is {}x{}, expected square",
            pi.rows(),
            pi.cols()
        )));
    }
    let n = (0..=MAX_TRIANGLE_N)
        .find(|&n| (n + 1) * (n + 2) / 2 >= size)
        .filter(|&n| (n + 1) * (n + 2) / 2 == size)
        .ok_or_else(|| Error::Structure(format!("{size} states is not a triangle size (N+1)(N+2)/2")))?;
    let index = TriIndex::new(n);
    for (r, s) in pi.row_sums().into_iter().enumerate() {
        let (i, j) = index.state(r);
        if (s - 1.0).abs() > ROW_TOL {
            return Err(Error::Validation(format!("row ({i},{j}) sums to {s}")));
        }
        if pi.row(r).iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::Validation(format!("row ({i},{j}) has an entry outside [0, 1]")));
        }
    }
    if pi[(0, 0)] != 1.0 {
        return Err(Error::Structure("(0,0) is not absorbing".into()));
    }
    for (r, &(i, j)) in index.states().iter().enumerate() {
        if i + j == 0 || (i > 0 && j > 0) {
            continue;
        }
        for (c, &(k, l)) in index.states().iter().enumerate() {
            let leaves_axis = if j == 0 { l > 0 } else { k > 0 };
            if leaves_axis && pi[(r, c)] > 0.0 {
                return Err(Error::Structure(format!(
                    "axis state ({i},{j}) sends mass {} to ({k},{l}); axes must be closed (block sizes {n}, {n}, {})",
                    pi[(r, c)],
                    n * n.saturating_sub(1) / 2
                )));
            }
        }
    }
    let axis1: Vec<usize> = (1..=n).map(|k| index.index(k, 0)).collect();
    let axis2: Vec<usize> = (1..=n).map(|k| index.index(0, k)).collect();
    let interior = interior_states(n);
    let inner: Vec<usize> = interior.iter().map(|&(i, j)| index.index(i, j)).collect();
    let q1 = pi.submatrix(&axis1);
    let q2 = pi.submatrix(&axis2);
    let q3 = pi.submatrix(&inner);
    let r1 = pi.select(&inner, &axis1);
    let r2 = pi.select(&inner, &axis2);
    let r = inner.iter().map(|&s| pi[(s, 0)]).collect();
    let (i1, a1) = block_ok(&q1);
    let (i2, a2) = block_ok(&q2);
    let (i3, a3) = block_ok(&q3);
    let hypotheses = BlockHypotheses {
        irreducible: [i1, i2, i3],
        aperiodic: [a1, a2, a3],
        r1_nonzero: r1.data().iter().any(|&v| v > 0.0),
        r2_nonzero: r2.data().iter().any(|&v| v > 0.0),
    };
    Ok(A2dmcSpec {
        index,
        pi: pi.clone(),
        interior,
        q1,
        q2,
        q3,
        r1,
        r2,
        r,
        hypotheses,
    })
}

const MAX_TRIANGLE_N: usize = crate::lift::MAX_N;

/// Assemble a chain from its blocks; each row's missing mass goes to `(0,0)`.
/// Interior rows follow [`interior_states`] order.
pub fn from_blocks(n: usize, q1: &Matrix, q2: &Matrix, q3: &Matrix, r1: &Matrix, r2: &Matrix) -> Result<A2dmcSpec> {
    let m = n * n.saturating_sub(1) / 2;
    let shapes = [
        ("Q1", q1, n, n),
        ("Q2", q2, n, n),
        ("Q3", q3, m, m),
        ("R1", r1, m, n),
        ("R2", r2, m, n),
    ];
    for (name, b, r, c) in shapes {
        if b.rows() != r || b.cols() != c {
            return Err(Error::Structure(format!(
                "{name} is {}x{}, expected {r}x{c} for N = {n}",
                b.rows(),
                b.cols()
            )));
        }
    }
    let index = TriIndex::new(n);
    let size = index.size();
    let mut pi = Matrix::zeros(size, size);
    pi[(0, 0)] = 1.0;
    let axis1: Vec<usize> = (1..=n).map(|k| index.index(k, 0)).collect();
    let axis2: Vec<usize> = (1..=n).map(|k| index.index(0, k)).collect();
    let inner: Vec<usize> = interior_states(n).iter().map(|&(i, j)| index.index(i, j)).collect();
    let mut put = |rows: &[usize], cols: &[usize], b: &Matrix| {
        for (a, &r) in rows.iter().enumerate() {
            for (c, &col) in cols.iter().enumerate() {
                pi[(r, col)] = b[(a, c)];
            }
        }
    };
    put(&axis1, &axis1, q1);
    put(&axis2, &axis2, q2);
    put(&inner, &inner, q3);
    put(&inner, &axis1, r1);
    put(&inner, &axis2, r2);
    for r in 1..size {
        let s: f64 = pi.row(r).iter().sum();
        if s > 1.0 + ROW_TOL {
            let (i, j) = index.state(r);
            return Err(Error::Validation(format!("row ({i},{j}) of the blocks sums to {s}")));
        }
        pi[(r, 0)] = (1.0 - s).max(0.0);
    }
    extract_blocks(&pi)
}

impl A2dmcSpec {
    pub fn from_chain(chain: &LiftedChain) -> Result<Self> {
        extract_blocks(&chain.pi)
    }

    pub fn n(&self) -> usize {
        self.index.n()
    }

    /// Sub-Markov matrix on all states except `(0,0)`, in triangle order.
    pub fn q_full(&self) -> Matrix {
        let idx: Vec<usize> = (1..self.index.size()).collect();
        self.pi.submatrix(&idx)
    }

    fn require_hypotheses(&self) -> Result<()> {
        match self.hypotheses.first_failure() {
            Some(msg) => Err(Error::Hypothesis(msg)),
            None => Ok(()),
        }
    }

    fn perron_blocks(&self) -> Result<[PerronPair; 3]> {
        Ok([
            perron_pair(&self.q1, DEFAULT_TOL)?,
            perron_pair(&self.q2, DEFAULT_TOL)?,
            perron_pair(&self.q3, DEFAULT_TOL)?,
        ])
    }

    fn embed_axis1(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.index.size()];
        for (k, x) in v.iter().enumerate() {
            out[self.index.index(k + 1, 0)] = *x;
        }
        out
    }

    fn embed_axis2(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.index.size()];
        for (k, x) in v.iter().enumerate() {
            out[self.index.index(0, k + 1)] = *x;
        }
        out
    }

    fn embed_interior(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.index.size()];
        for (&(i, j), x) in self.interior.iter().zip(v) {
            out[self.index.index(i, j)] = *x;
        }
        out
    }
}

/// The five limiting regimes, plus the axis-start shortcut.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum YaglomCase {
    StrongType1,
    StrongType2,
    Coexistence,
    TieAboveQ3,
    TieEqualsQ3,
    /// Started on an axis: the chain never leaves it.
    AxisStart,
}

impl YaglomCase {
    pub fn label(&self) -> &'static str {
        match self {
            YaglomCase::StrongType1 => "theta1>=theta3 and theta1>theta2",
            YaglomCase::StrongType2 => "theta2>=theta3 and theta2>theta1",
            YaglomCase::Coexistence => "theta3>theta1,theta2",
            YaglomCase::TieAboveQ3 => "theta1=theta2>theta3",
            YaglomCase::TieEqualsQ3 => "theta1=theta2=theta3",
            YaglomCase::AxisStart => "axis initial state",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Cmp {
    Greater,
    Less,
    Equal,
    /// In the indeterminate band; `bool` is `a > b`.
    Band(bool),
}

fn compare(a: f64, b: f64) -> Cmp {
    let gap = (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    if gap <= TIE_EQUAL {
        Cmp::Equal
    } else if gap > TIE_STRICT {
        if a > b {
            Cmp::Greater
        } else {
            Cmp::Less
        }
    } else {
        Cmp::Band(a > b)
    }
}

/// Resolve band comparisons either by sign (`as_equal = false`) or as ties.
fn resolve(c: Cmp, as_equal: bool) -> std::cmp::Ordering {
    use std::cmp::Ordering::*;
    match c {
        Cmp::Greater => Greater,
        Cmp::Less => Less,
        Cmp::Equal => Equal,
        Cmp::Band(_) if as_equal => Equal,
        Cmp::Band(true) => Greater,
        Cmp::Band(false) => Less,
    }
}

fn classify_with(t: [f64; 3], as_equal: bool) -> YaglomCase {
    use std::cmp::Ordering::*;
    let c12 = resolve(compare(t[0], t[1]), as_equal);
    let c13 = resolve(compare(t[0], t[2]), as_equal);
    let c23 = resolve(compare(t[1], t[2]), as_equal);
    match (c12, c13, c23) {
        (Greater, Greater | Equal, _) => YaglomCase::StrongType1,
        (Less, _, Greater | Equal) => YaglomCase::StrongType2,
        (Equal, Greater, _) => YaglomCase::TieAboveQ3,
        (Equal, Equal, _) => YaglomCase::TieEqualsQ3,
        _ => YaglomCase::Coexistence,
    }
}

/// Case of the limit for an interior start, with the alternative reading when a tie is ambiguous.
pub fn classify(theta: [f64; 3]) -> (YaglomCase, Option<YaglomCase>) {
    let banded = [(0, 1), (0, 2), (1, 2)]
        .iter()
        .any(|&(a, b)| matches!(compare(theta[a], theta[b]), Cmp::Band(_)));
    let primary = classify_with(theta, false);
    let alternative = banded.then(|| classify_with(theta, true));
    (primary, alternative)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenData {
    pub u1: Vec<f64>,
    pub v1: Vec<f64>,
    pub u2: Vec<f64>,
    pub v2: Vec<f64>,
    pub u3: Vec<f64>,
    pub v3: Vec<f64>,
    /// `v3 R_i (θ3 I - Q_i)^{-1}`, only when `θ3 > θ_i`.
    pub w1: Option<Vec<f64>>,
    pub w2: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TieWarning {
    pub message: String,
    pub alternative_case: YaglomCase,
    #[serde(rename = "alternative_paper_case")]
    pub alternative_label: String,
    pub alternative_distribution: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct YaglomReport {
    pub case: YaglomCase,
    /// The branch condition, e.g. `theta1=theta2>theta3`.
    #[serde(rename = "paper_case")]
    pub case_label: String,
    pub initial: (usize, usize),
    pub theta: [f64; 3],
    pub eigen_data: Option<EigenData>,
    /// Weight of axis 1 in the tie cases.
    pub p_ij: Option<f64>,
    pub q: Option<f64>,
    /// Indexed like the triangle; the `(0,0)` entry is always 0.
    pub distribution: Vec<f64>,
    pub warning: Option<TieWarning>,
}

impl YaglomReport {
    pub fn interior_mass(&self, spec: &A2dmcSpec) -> f64 {
        spec.interior
            .iter()
            .map(|&(i, j)| self.distribution[spec.index.index(i, j)])
            .sum()
    }
}

/// `x (θ I - Q)^{-1}` for a row vector `x`.
fn resolvent_left(q: &Matrix, theta: f64, x: &[f64]) -> Result<Vec<f64>> {
    let lu = Lu::new(&q.shifted_negative(theta))
        .ok_or_else(|| Error::Degenerate(format!("θI - Q is singular at θ = {theta}")))?;
    Ok(lu.solve_left(x))
}

/// `(θ I - Q)^{-1} x` for a column vector `x`.
fn resolvent_right(q: &Matrix, theta: f64, x: &[f64]) -> Result<Vec<f64>> {
    let lu = Lu::new(&q.shifted_negative(theta))
        .ok_or_else(|| Error::Degenerate(format!("θI - Q is singular at θ = {theta}")))?;
    Ok(lu.solve(x))
}

fn mixture(spec: &A2dmcSpec, p: f64, v1: &[f64], v2: &[f64]) -> Vec<f64> {
    let a = spec.embed_axis1(v1);
    let b = spec.embed_axis2(v2);
    a.iter().zip(&b).map(|(x, y)| p * x + (1.0 - p) * y).collect()
}

struct CaseOutcome {
    distribution: Vec<f64>,
    p_ij: Option<f64>,
    q: Option<f64>,
}

fn interior_outcome(
    spec: &A2dmcSpec,
    case: YaglomCase,
    pairs: &[PerronPair; 3],
    w: (&Option<Vec<f64>>, &Option<Vec<f64>>),
    start: usize,
) -> Result<CaseOutcome> {
    let [p1, p2, p3] = pairs;
    let r1u1 = spec.r1.mul_vec(&p1.u);
    let r2u2 = spec.r2.mul_vec(&p2.u);
    Ok(match case {
        YaglomCase::StrongType1 => CaseOutcome {
            distribution: spec.embed_axis1(&p1.v),
            p_ij: None,
            q: None,
        },
        YaglomCase::StrongType2 | YaglomCase::AxisStart => CaseOutcome {
            distribution: spec.embed_axis2(&p2.v),
            p_ij: None,
            q: None,
        },
        YaglomCase::Coexistence => {
            let (Some(w1), Some(w2)) = w else {
                return Err(Error::Degenerate("coexistence needs θ3 above θ1 and θ2".into()));
            };
            let total = 1.0 + w1.iter().sum::<f64>() + w2.iter().sum::<f64>();
            let a = spec.embed_interior(&p3.v);
            let b = spec.embed_axis1(w1);
            let c = spec.embed_axis2(w2);
            CaseOutcome {
                distribution: (0..a.len()).map(|k| (a[k] + b[k] + c[k]) / total).collect(),
                p_ij: None,
                q: None,
            }
        }
        YaglomCase::TieAboveQ3 => {
            let theta = 0.5 * (p1.theta + p2.theta);
            let x1 = resolvent_right(&spec.q3, theta, &r1u1)?;
            let x2 = resolvent_right(&spec.q3, theta, &r2u2)?;
            let p = x1[start] / (x1[start] + x2[start]);
            CaseOutcome {
                distribution: mixture(spec, p, &p1.v, &p2.v),
                p_ij: Some(p),
                q: None,
            }
        }
        YaglomCase::TieEqualsQ3 => {
            let a: f64 = p3.v.iter().zip(&r1u1).map(|(x, y)| x * y).sum();
            let b: f64 = p3.v.iter().zip(&r2u2).map(|(x, y)| x * y).sum();
            let q = a / (a + b);
            CaseOutcome {
                distribution: mixture(spec, q, &p1.v, &p2.v),
                p_ij: None,
                q: Some(q),
            }
        }
    })
}

pub fn yaglom_limit(spec: &A2dmcSpec, initial: (usize, usize)) -> Result<YaglomReport> {
    let (i, j) = initial;
    if i + j == 0 || i + j > spec.n() {
        return Err(Error::Validation(format!(
            "initial state ({i},{j}) must be a non-absorbed state of the triangle"
        )));
    }
    if i == 0 || j == 0 {
        return axis_limit(spec, initial);
    }
    spec.require_hypotheses()?;
    let pairs = spec.perron_blocks()?;
    let theta = [pairs[0].theta, pairs[1].theta, pairs[2].theta];
    let w1 = if theta[2] > theta[0] {
        Some(resolvent_left(&spec.q1, theta[2], &spec.r1.vec_mul(&pairs[2].v))?)
    } else {
        None
    };
    let w2 = if theta[2] > theta[1] {
        Some(resolvent_left(&spec.q2, theta[2], &spec.r2.vec_mul(&pairs[2].v))?)
    } else {
        None
    };
    let start = spec
        .interior
        .iter()
        .position(|&s| s == initial)
        .expect("interior state is listed");
    let (case, alternative) = classify(theta);
    let outcome = interior_outcome(spec, case, &pairs, (&w1, &w2), start)?;
    let warning = match alternative {
        Some(alt) => {
            let alt_outcome = interior_outcome(spec, alt, &pairs, (&w1, &w2), start)?;
            Some(TieWarning {
                message: format!(
                    "Perron roots {theta:?} differ by a relative gap between {TIE_EQUAL:e} and {TIE_STRICT:e}"
                ),
                alternative_case: alt,
                alternative_label: alt.label().into(),
                alternative_distribution: alt_outcome.distribution,
            })
        }
        None => None,
    };
    let [p1, p2, p3] = pairs;
    Ok(YaglomReport {
        case,
        case_label: case.label().into(),
        initial,
        theta,
        eigen_data: Some(EigenData {
            u1: p1.u,
            v1: p1.v,
            u2: p2.u,
            v2: p2.v,
            u3: p3.u,
            v3: p3.v,
            w1,
            w2,
        }),
        p_ij: outcome.p_ij,
        q: outcome.q,
        distribution: outcome.distribution,
        warning,
    })
}

fn axis_limit(spec: &A2dmcSpec, (i, j): (usize, usize)) -> Result<YaglomReport> {
    let (q, k) = if j == 0 { (&spec.q1, 0) } else { (&spec.q2, 1) };
    if !spec.hypotheses.irreducible[k] || !spec.hypotheses.aperiodic[k] {
        return Err(Error::Hypothesis(format!(
            "Q{} must be irreducible and aperiodic",
            k + 1
        )));
    }
    let pair = perron_pair(q, DEFAULT_TOL)?;
    let mut theta = [f64::NAN; 3];
    theta[k] = pair.theta;
    let distribution = if k == 0 {
        spec.embed_axis1(&pair.v)
    } else {
        spec.embed_axis2(&pair.v)
    };
    Ok(YaglomReport {
        case: YaglomCase::AxisStart,
        case_label: YaglomCase::AxisStart.label().into(),
        initial: (i, j),
        theta,
        eigen_data: None,
        p_ij: None,
        q: None,
        distribution,
        warning: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum QsdKind {
    Axis1,
    Axis2,
    Interior,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Qsd {
    pub kind: QsdKind,
    pub theta: f64,
    /// Indexed like the triangle; the `(0,0)` entry is 0.
    pub measure: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QsdSet {
    /// `v1 ⊗ δ0`, `δ0 ⊗ v2`, and the interior QSD when it exists.
    pub measures: Vec<Qsd>,
    /// Whether the mixtures `p v1⊗δ0 + (1-p) δ0⊗v2`, `0 < p < 1`, are quasi-stationary too (needs `θ1 = θ2`).
    pub mixtures_are_qsd: bool,
    pub theta: [f64; 3],
}

impl QsdSet {
    pub fn has_interior(&self) -> bool {
        self.measures.iter().any(|q| q.kind == QsdKind::Interior)
    }
}

pub fn enumerate_qsd(spec: &A2dmcSpec) -> Result<QsdSet> {
    spec.require_hypotheses()?;
    let pairs = spec.perron_blocks()?;
    let theta = [pairs[0].theta, pairs[1].theta, pairs[2].theta];
    let mut measures = vec![
        Qsd {
            kind: QsdKind::Axis1,
            theta: theta[0],
            measure: spec.embed_axis1(&pairs[0].v),
        },
        Qsd {
            kind: QsdKind::Axis2,
            theta: theta[1],
            measure: spec.embed_axis2(&pairs[1].v),
        },
    ];
    let dominant =
        matches!(compare(theta[2], theta[0]), Cmp::Greater) && matches!(compare(theta[2], theta[1]), Cmp::Greater);
    if dominant {
        let v3 = &pairs[2].v;
        let w1 = resolvent_left(&spec.q1, theta[2], &spec.r1.vec_mul(v3))?;
        let w2 = resolvent_left(&spec.q2, theta[2], &spec.r2.vec_mul(v3))?;
        let total = 1.0 + w1.iter().sum::<f64>() + w2.iter().sum::<f64>();
        let a = spec.embed_interior(v3);
        let b = spec.embed_axis1(&w1);
        let c = spec.embed_axis2(&w2);
        measures.push(Qsd {
            kind: QsdKind::Interior,
            theta: theta[2],
            measure: (0..a.len()).map(|k| (a[k] + b[k] + c[k]) / total).collect(),
        });
    }
    Ok(QsdSet {
        measures,
        mixtures_are_qsd: compare(theta[0], theta[1]) == Cmp::Equal,
        theta,
    })
}

/// Largest entry of `|ν Q - θ ν|` over the non-absorbed states.
pub fn qsd_residual(spec: &A2dmcSpec, measure: &[f64], theta: f64) -> f64 {
    let q = spec.q_full();
    let nu = &measure[1..];
    let nq = q.vec_mul(nu);
    nq.iter().zip(nu).fold(0.0, |m, (a, b)| m.max((a - theta * b).abs()))
}

/// Law at time `n` conditioned on survival, with the log of the surviving mass.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalLaw {
    pub distribution: Vec<f64>,
    pub log_survival: f64,
}

pub fn conditional_law_exact(spec: &A2dmcSpec, initial: (usize, usize), n: usize) -> Result<ConditionalLaw> {
    let (i, j) = initial;
    let start = spec.index.try_index(i, j).filter(|&s| s != 0).ok_or_else(|| {
        Error::Validation(format!(
            "initial state ({i},{j}) must be a non-absorbed state of the triangle"
        ))
    })?;
    let mut x = vec![0.0; spec.index.size()];
    x[start] = 1.0;
    let mut log_survival = 0.0;
    for step in 0..n {
        let mut y = spec.pi.vec_mul(&x);
        y[0] = 0.0;
        let mass: f64 = y.iter().sum();
        if mass <= 0.0 || !mass.is_finite() {
            return Err(Error::Degenerate(format!(
                "surviving mass vanished at step {}",
                step + 1
            )));
        }
        log_survival += mass.ln();
        y.iter_mut().for_each(|v| *v /= mass);
        x = y;
    }
    Ok(ConditionalLaw {
        distribution: x,
        log_survival,
    })
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RnRegime {
    /// `θ1 > θ3`: `R^(n) ~ θ1^n (θ1 I - Q3)^{-1} R1 u1 v1`.
    AxisDominant,
    /// `θ3 > θ1`: `R^(n) ~ θ3^n u3 v3 R1 (θ3 I - Q1)^{-1}`.
    InteriorDominant,
    /// `θ1 = θ3`: `R^(n) ~ n θ^(n-1) u3 v3 R1 u1 v1`.
    Equal,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RnRow {
    pub n: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `max |ratio - 1|` over the entries.
    pub max_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RnReport {
    pub regime: RnRegime,
    pub theta1: f64,
    pub theta3: f64,
    pub rows: Vec<RnRow>,
    /// `R^(1)` reproduced `R1` exactly.
    pub first_term_exact: bool,
}

/// Compare `R^(n) = Σ_{k<n} Q3^k R1 Q1^{n-1-k}` with its predicted leading term on `n_grid`.
pub fn rn_asymptotics_check(spec: &A2dmcSpec, n_grid: &[usize]) -> Result<RnReport> {
    spec.require_hypotheses()?;
    let p1 = perron_pair(&spec.q1, DEFAULT_TOL)?;
    let p3 = perron_pair(&spec.q3, DEFAULT_TOL)?;
    let (t1, t3) = (p1.theta, p3.theta);
    let regime = match compare(t1, t3) {
        Cmp::Greater => RnRegime::AxisDominant,
        Cmp::Less => RnRegime::InteriorDominant,
        Cmp::Equal => RnRegime::Equal,
        Cmp::Band(_) => {
            return Err(Error::Hypothesis(format!(
                "θ1 = {t1} and θ3 = {t3} fall in the indeterminate band"
            )))
        }
    };
    let outer = |col: &[f64], row: &[f64]| {
        let mut m = Matrix::zeros(col.len(), row.len());
        for (a, x) in col.iter().enumerate() {
            for (b, y) in row.iter().enumerate() {
                m[(a, b)] = x * y;
            }
        }
        m
    };
    // Predicted term divided by θ^n, θ = max(θ1, θ3); the Equal regime keeps a factor n.
    let theta = t1.max(t3);
    let base = match regime {
        RnRegime::AxisDominant => {
            let inv = Lu::new(&spec.q3.shifted_negative(t1))
                .ok_or_else(|| Error::Degenerate("θ1 I - Q3 singular".into()))?
                .inverse();
            outer(&inv.matmul(&spec.r1).mul_vec(&p1.u), &p1.v)
        }
        RnRegime::InteriorDominant => {
            let inv = Lu::new(&spec.q1.shifted_negative(t3))
                .ok_or_else(|| Error::Degenerate("θ3 I - Q1 singular".into()))?
                .inverse();
            outer(&p3.u, &inv.vec_mul(&spec.r1.vec_mul(&p3.v)))
        }
        RnRegime::Equal => {
            let c: f64 = p3.v.iter().zip(spec.r1.mul_vec(&p1.u)).map(|(a, b)| a * b).sum();
            outer(&p3.u, &p1.v).scale(c / theta)
        }
    };
    let max_n = n_grid.iter().copied().max().unwrap_or(0);
    let q1s = spec.q1.scale(1.0 / theta);
    let q3s = spec.q3.scale(1.0 / theta);
    // scaled[n] = R^(n) / θ^n; power = Q1^n / θ^n
    let mut scaled = spec.r1.scale(1.0 / theta);
    let mut power = q1s.clone();
    let mut rows = Vec::new();
    let mut first_term_exact = true;
    for n in 1..=max_n {
        if n > 1 {
            scaled = spec.r1.matmul(&power).scale(1.0 / theta).add(&q3s.matmul(&scaled));
            power = power.matmul(&q1s);
        } else {
            first_term_exact = scaled.scale(theta).sub(&spec.r1).max_abs() <= 4.0 * f64::EPSILON * spec.r1.max_abs();
        }
        if n_grid.contains(&n) {
            let pred = if regime == RnRegime::Equal {
                base.scale(n as f64)
            } else {
                base.clone()
            };
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for (a, b) in scaled.data().iter().zip(pred.data()) {
                if *b == 0.0 {
                    continue;
                }
                let ratio = a / b;
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
            rows.push(RnRow {
                n,
                min_ratio: lo,
                max_ratio: hi,
                max_deviation: (lo - 1.0).abs().max((hi - 1.0).abs()),
            });
        }
    }
    Ok(RnReport {
        regime,
        theta1: t1,
        theta3: t3,
        rows,
        first_term_exact,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbVerdict {
    pub seed: u64,
    pub epsilon: f64,
    pub theta: [f64; 3],
    pub case: YaglomCase,
    /// `max(θ1, θ2) - θ3`.
    pub margin: f64,
    pub no_coexistence: bool,
}

/// Multiply each positive interior transition by `1 + ε ξ`, `ξ` uniform in `[-1, 1]`, and renormalize.
pub fn perturb_interior(chain: &LiftedChain, epsilon: f64, seed: u64) -> Matrix {
    let mut pi = chain.pi.clone();
    let mut rng = SplitMix::stream(seed, 0x70657274);
    for &(i, j) in &interior_states(chain.n()) {
        let r = chain.index.index(i, j);
        let row = pi.row_mut(r);
        for v in row.iter_mut() {
            if *v > 0.0 {
                *v *= 1.0 + epsilon * rng.next_signed();
            }
        }
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
    }
    pi
}

pub fn perturb_experiment(spec: &KernelSpec, epsilon: f64, seed: u64) -> Result<PerturbVerdict> {
    let chain = lift_full(spec)?;
    perturb_lifted(&chain, epsilon, seed)
}

fn perturb_lifted(chain: &LiftedChain, epsilon: f64, seed: u64) -> Result<PerturbVerdict> {
    let a = extract_blocks(&perturb_interior(chain, epsilon, seed))?;
    a.require_hypotheses()?;
    let pairs = a.perron_blocks()?;
    let theta = [pairs[0].theta, pairs[1].theta, pairs[2].theta];
    let (case, _) = classify(theta);
    let margin = theta[0].max(theta[1]) - theta[2];
    Ok(PerturbVerdict {
        seed,
        epsilon,
        theta,
        case,
        margin,
        no_coexistence: margin > 0.0 && case != YaglomCase::Coexistence,
    })
}

/// Independent trials for seeds `seeds`, verdicts in seed order.
pub fn perturb_batch(spec: &KernelSpec, epsilon: f64, seeds: &[u64], exec: Execution) -> Result<Vec<PerturbVerdict>> {
    let chain = lift_full(spec)?;
    map_range(exec, seeds.len(), |k| perturb_lifted(&chain, epsilon, seeds[k]))
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The N = 2 chain with a dominant interior block.
    pub(crate) fn worked_example() -> A2dmcSpec {
        let index = TriIndex::new(2);
        let mut pi = Matrix::zeros(6, 6);
        let at = |i, j| index.index(i, j);
        pi[(at(0, 0), at(0, 0))] = 1.0;
        for (a, b) in [((1, 0), (2, 0)), ((0, 1), (0, 2))] {
            pi[(at(a.0, a.1), at(a.0, a.1))] = 0.2;
            pi[(at(a.0, a.1), at(b.0, b.1))] = 0.1;
            pi[(at(b.0, b.1), at(a.0, a.1))] = 0.1;
            pi[(at(b.0, b.1), at(b.0, b.1))] = 0.2;
            pi[(at(a.0, a.1), 0)] = 0.7;
            pi[(at(b.0, b.1), 0)] = 0.7;
        }
        let c = at(1, 1);
        pi[(c, c)] = 0.6;
        pi[(c, at(1, 0))] = 0.15;
        pi[(c, at(2, 0))] = 0.05;
        pi[(c, at(0, 1))] = 0.05;
        pi[(c, at(0, 2))] = 0.15;
        extract_blocks(&pi).unwrap()
    }

    #[test]
    fn worked_example_limit() {
        let spec = worked_example();
        assert_eq!(spec.q3, Matrix::from_rows(&[vec![0.6]]));
        let rep = yaglom_limit(&spec, (1, 1)).unwrap();
        assert_eq!(rep.case, YaglomCase::Coexistence);
        let w1 = rep.eigen_data.as_ref().unwrap().w1.clone().unwrap();
        assert!((w1[0] - 13.0 / 30.0).abs() < 1e-12 && (w1[1] - 7.0 / 30.0).abs() < 1e-12);
        assert!((rep.interior_mass(&spec) - 3.0 / 7.0).abs() < 1e-12);
        let exact = conditional_law_exact(&spec, (1, 1), 200).unwrap();
        assert!(total_variation(&exact.distribution, &rep.distribution) < 1e-10);
    }

    #[test]
    fn axis_start_stays_on_axis() {
        let spec = worked_example();
        let rep = yaglom_limit(&spec, (2, 0)).unwrap();
        assert_eq!(rep.case, YaglomCase::AxisStart);
        assert!((rep.distribution[spec.index.index(1, 0)] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn structure_error_on_leaky_axis() {
        let mut pi = worked_example().pi;
        let idx = TriIndex::new(2);
        pi[(idx.index(1, 0), idx.index(1, 0))] = 0.1;
        pi[(idx.index(1, 0), idx.index(1, 1))] = 0.1;
        assert!(matches!(extract_blocks(&pi), Err(Error::Structure(_))));
    }

    #[test]
    fn classification_table() {
        assert_eq!(classify([0.9, 0.8, 0.7]).0, YaglomCase::StrongType1);
        assert_eq!(classify([0.9, 0.8, 0.9]).0, YaglomCase::StrongType1);
        assert_eq!(classify([0.8, 0.9, 0.7]).0, YaglomCase::StrongType2);
        assert_eq!(classify([0.8, 0.7, 0.9]).0, YaglomCase::Coexistence);
        assert_eq!(classify([0.8, 0.8, 0.7]).0, YaglomCase::TieAboveQ3);
        assert_eq!(classify([0.8, 0.8, 0.8]).0, YaglomCase::TieEqualsQ3);
        let (primary, alt) = classify([0.8, 0.8 * (1.0 - 1e-8), 0.7]);
        assert_eq!(primary, YaglomCase::StrongType1);
        assert_eq!(alt, Some(YaglomCase::TieAboveQ3));
    }

    #[test]
    fn triple_tie_converges_slowly() {
        let q = Matrix::from_rows(&[vec![0.45, 0.45], vec![0.45, 0.45]]);
        let r1 = Matrix::from_rows(&[vec![0.06, 0.0]]);
        let r2 = Matrix::from_rows(&[vec![0.0, 0.04]]);
        let spec = from_blocks(2, &q, &q, &Matrix::from_rows(&[vec![0.9]]), &r1, &r2).unwrap();
        let rep = yaglom_limit(&spec, (1, 1)).unwrap();
        assert_eq!(rep.case, YaglomCase::TieEqualsQ3);
        assert!((rep.q.unwrap() - 0.6).abs() < 1e-12);
        let tv = |n| {
            total_variation(
                &conditional_law_exact(&spec, (1, 1), n).unwrap().distribution,
                &rep.distribution,
            )
        };
        let (a, b) = (tv(2000), tv(4000));
        assert!(a < 0.01 && (a / b - 2.0).abs() < 0.05, "{a} {b}");
    }

    #[test]
    fn rn_first_term() {
        let rep = rn_asymptotics_check(&worked_example(), &[1, 60]).unwrap();
        assert!(rep.first_term_exact);
        assert_eq!(rep.regime, RnRegime::InteriorDominant);
        assert!(rep.rows[1].max_deviation < 0.02);
    }
}
