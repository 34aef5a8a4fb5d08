//! Acceptance criteria, one line each: `criterion N: PASS|FAIL (runtime) detail`.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::Zero;

use neutral_spectra::dirichlet::ordering_report;
use neutral_spectra::exact::{binom, int, to_f64};
use neutral_spectra::kernel::{random_birth_death, random_reversible, reversible_measure, KernelSpec};
use neutral_spectra::lift::lift_full;
use neutral_spectra::linalg::Matrix;
use neutral_spectra::moran::verify_eigen;
use neutral_spectra::poly::{build_p, collocation_determinant, orthogonality_sum_exact, BivariatePoly, ScaledPoly};
use neutral_spectra::qsd::{
    conditional_law_exact, enumerate_qsd, from_blocks, perturb_batch, qsd_residual, total_variation, yaglom_limit,
    A2dmcSpec, QsdKind, YaglomCase,
};
use neutral_spectra::rng::SplitMix;
use neutral_spectra::sim::{sample_conditional, GeneralSampler};
use neutral_spectra::spectral::{assemble_basis, block_spectrum_union, compare_truncation, perron_pair};
use neutral_spectra::Execution;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn xy_poly(terms: &[((u32, u32), i64)]) -> BivariatePoly {
    terms.iter().fold(BivariatePoly::zero(), |acc, &((i, j), c)| {
        &acc + &BivariatePoly::monomial(i, j, int(c))
    })
}

fn printed(core: &[((u32, u32), i64)], scale_sq: i64, sign: i8) -> ScaledPoly {
    ScaledPoly {
        core: xy_poly(core),
        scale_sq: int(scale_sq),
        sign,
    }
}

/// Printed P_0..P_5 as floating closed forms.
fn printed_value(d: u32, x: f64, y: f64) -> f64 {
    match d {
        0 => 1.0,
        1 => x,
        2 => 2.0 * 6f64.sqrt() * x * y,
        3 => -2.0 * 30f64.sqrt() * x * y * (x - y),
        4 => 4.0 * 21f64.sqrt() * x * y * (x * x - 3.0 * x * y + y * y + 1.0),
        5 => -6.0 * 20f64.sqrt() * x * y * (x - y) * (x * x - 5.0 * x * y + y * y + 5.0),
        _ => unreachable!(),
    }
}

fn criterion_1() -> Outcome {
    // XY(X-Y) = X²Y - XY², XY(X²-3XY+Y²+1), XY(X-Y)(X²-5XY+Y²+5)
    let table = [
        printed(&[((0, 0), 1)], 1, 1),
        printed(&[((1, 0), 1)], 1, 1),
        printed(&[((1, 1), 1)], 24, 1),
        printed(&[((2, 1), 1), ((1, 2), -1)], 120, -1),
        printed(&[((3, 1), 1), ((2, 2), -3), ((1, 3), 1), ((1, 1), 1)], 336, 1),
        printed(
            &[
                ((4, 1), 1),
                ((3, 2), -6),
                ((2, 3), 6),
                ((1, 4), -1),
                ((2, 1), 5),
                ((1, 2), -5),
            ],
            720,
            -1,
        ),
    ];
    let mut worst = 0.0f64;
    for (d, expected) in table.iter().enumerate() {
        let p = build_p(d as u32);
        if !p.same_polynomial(expected) {
            return outcome(false, format!("P_{d} = {p} differs from the printed form {expected}"));
        }
        for i in 0..=6 {
            for j in 0..=6 {
                let v = printed_value(d as u32, i as f64, j as f64);
                let err = (p.eval(i, j) - v).abs() / v.abs().max(1.0);
                worst = worst.max(err);
            }
        }
    }
    outcome(
        worst <= 1e-12,
        format!("cores exact for d<=5, max relative evaluation error {worst:.2e}"),
    )
}

fn criterion_2() -> Outcome {
    let x = BivariatePoly::x();
    let y = BivariatePoly::y();
    let xy = &x * &y;
    for d in 0..=12u32 {
        let p = build_p(d).core;
        let deg = BivariatePoly::linear(int(d as i64), int(1), int(1));
        let lhs1 = &(&x * &p.shift(1, 0)) + &(&y * &p.shift(0, 1));
        if lhs1 != &deg * &p {
            return outcome(false, format!("first recurrence fails at d={d}"));
        }
        let deg2 = BivariatePoly::linear(int(-(d as i64)), int(1), int(1));
        let lhs2 = &(&x * &p.shift(-1, 0)) + &(&y * &p.shift(0, -1));
        if lhs2 != &deg2 * &p {
            return outcome(false, format!("second recurrence fails at d={d}"));
        }
        if d >= 2 {
            let c = BivariatePoly::constant(int((d * (d - 1)) as i64));
            let lhs = &(&xy.scale(&int(2)) - &c) * &p;
            let rhs = &xy * &(&p.shift(1, -1) + &p.shift(-1, 1));
            if lhs != rhs {
                return outcome(false, format!("three-color identity fails at d={d}"));
            }
        }
    }
    for d in 2..=10u32 {
        let p = build_p(d).core;
        let parity = if d % 2 == 0 { int(1) } else { int(-1) };
        let mut k = 0;
        while 2 * k < d {
            if !p.homogeneous(d - 2 * k - 1).is_zero() {
                return outcome(false, format!("(b) fails at d={d}, k={k}"));
            }
            k += 1;
        }
        if !p.divisible_by_x() || !p.divisible_by_y() || (d % 2 == 1 && !p.divisible_by_x_minus_y()) {
            return outcome(false, format!("(c) fails at d={d}"));
        }
        if p.swap() != p.scale(&parity) || p.reflect() != p.scale(&parity) {
            return outcome(false, format!("(d) fails at d={d}"));
        }
        let r = d as i64 - 1;
        for i in -r..=r {
            for j in -r..=r {
                if i * j >= 0 && i.abs() + j.abs() <= r && !p.eval_int(i, j).is_zero() {
                    return outcome(false, format!("(e) fails at d={d}, ({i},{j})"));
                }
            }
        }
        if collocation_determinant(d).is_zero() {
            return outcome(false, format!("(f) fails at d={d}"));
        }
        if d >= 3 {
            for j in 1..=(d as i64 - 2) {
                let a = p.eval_int(j, d as i64 - j);
                let b = p.eval_int(j + 1, d as i64 - j - 1);
                if (a * b) >= BigRational::zero() {
                    return outcome(false, format!("(g) fails at d={d}, j={j}"));
                }
            }
        }
    }
    for d in 0..2u32 {
        if collocation_determinant(d).is_zero() {
            return outcome(false, format!("(f) fails at d={d}"));
        }
    }
    outcome(true, "recurrences exact for d<=12; (b)-(g) hold for d<=10")
}

fn criterion_3() -> Outcome {
    for d in 2..=8u32 {
        for d2 in 2..=8u32 {
            if d == d2 {
                continue;
            }
            for k in 2..=20u32 {
                if !orthogonality_sum_exact(d, d2, k).rational.is_zero() {
                    return outcome(false, format!("sum nonzero for d={d}, d'={d2}, k={k}"));
                }
            }
        }
    }
    let mut constants = Vec::new();
    for d in 2..=8u32 {
        let ratios: Vec<f64> = (d..=20)
            .map(|k| {
                let s = orthogonality_sum_exact(d, d, k);
                let b = BigRational::from_integer(binom((k + d - 1) as i64, (2 * d - 1) as i64));
                to_f64(&(&s.rational * &s.rational * &s.scale_sq / (&b * &b))).sqrt()
            })
            .collect();
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(0.0, f64::max);
        if (hi - lo) / hi > 1e-10 {
            return outcome(false, format!("ratio spread {:.2e} at d={d}", (hi - lo) / hi));
        }
        constants.push(lo);
    }
    let c2 = constants[0];
    let shown: Vec<String> = constants.iter().map(|c| format!("{c:.6}")).collect();
    outcome(
        (c2 - 24.0).abs() < 1e-10,
        format!(
            "off-diagonal sums vanish exactly; c_d for d=2..8 = [{}]",
            shown.join(", ")
        ),
    )
}

fn bd_fixtures() -> Vec<KernelSpec> {
    (0..50u64)
        .map(|s| random_birth_death(1000 + s, 2 + (s as usize % 11)))
        .collect()
}

fn dense_eigenvalues(m: &Matrix) -> Vec<f64> {
    let a = DMatrix::from_row_slice(m.rows(), m.cols(), m.data());
    let mut e: Vec<f64> = a.complex_eigenvalues().iter().map(|z| z.re).collect();
    e.sort_by(|a, b| b.total_cmp(a));
    e
}

fn criterion_4() -> Outcome {
    let (mut worst_res, mut min_sv, mut worst_spec) = (0.0f64, f64::INFINITY, 0.0f64);
    for (s, k) in bd_fixtures().iter().enumerate() {
        let mu = match reversible_measure(k) {
            Ok(mu) => mu,
            Err(e) => return outcome(false, format!("fixture {s}: {e}")),
        };
        let chain = lift_full(k).unwrap();
        let basis = assemble_basis(k, &mu).unwrap();
        let check = basis.check(&chain);
        if check.count != check.expected {
            return outcome(
                false,
                format!("fixture {s}: {} vectors, expected {}", check.count, check.expected),
            );
        }
        worst_res = worst_res.max(check.max_residual);
        min_sv = min_sv.min(check.min_singular_value);
        let union = block_spectrum_union(k, &mu).unwrap();
        if basis.eigenvalues() != union {
            return outcome(
                false,
                format!("fixture {s}: basis eigenvalues differ from the block union"),
            );
        }
        let dense = dense_eigenvalues(&chain.pi);
        for (a, b) in dense.iter().zip(&union) {
            worst_spec = worst_spec.max((a - b).abs());
        }
    }
    outcome(
        worst_res < 1e-8 && min_sv > 1e-8 && worst_spec < 1e-8,
        format!(
            "50 kernels: max residual {worst_res:.2e}, min singular value {min_sv:.2e}, dense spectrum gap {worst_spec:.2e}"
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut min_strict = f64::INFINITY;
    let mut worst_eq = 0.0f64;
    for (s, k) in bd_fixtures().iter().enumerate() {
        let rep = ordering_report(k).unwrap();
        if !rep.all_hold() {
            let bad: Vec<String> = rep
                .checks
                .iter()
                .filter(|c| c.verdict != neutral_spectra::dirichlet::Verdict::Holds)
                .map(|c| format!("{} ({:?}, margin {:.2e})", c.name, c.verdict, c.margin))
                .collect();
            return outcome(false, format!("fixture {s}: {}", bad.join("; ")));
        }
        for c in &rep.checks {
            match c.relation {
                neutral_spectra::dirichlet::Relation::Strict => min_strict = min_strict.min(c.margin),
                neutral_spectra::dirichlet::Relation::Equal if c.name.starts_with("theta_D") => {
                    worst_eq = worst_eq.max(c.margin.abs())
                }
                _ => {}
            }
        }
    }
    outcome(
        true,
        format!("50 kernels: all checks hold; equality gap {worst_eq:.2e}, smallest strict margin {min_strict:.2e}"),
    )
}

fn criterion_6() -> Outcome {
    let k = random_reversible(606, 14, 0.15);
    let mu = reversible_measure(&k).unwrap();
    let (mut eq1, mut eq2, mut mono) = (0.0f64, 0.0f64, 0.0f64);
    for n_prime in 4..=13 {
        let t = compare_truncation(&k, &mu, n_prime).unwrap();
        eq1 = eq1.max((t.blocks[0] - t.base).abs());
        eq2 = eq2.max((t.sup_high_blocks() - t.interior).abs());
        for w in t.blocks.windows(2) {
            mono = mono.max(w[1] - w[0]);
        }
    }
    outcome(
        eq1 <= 1e-8 && eq2 <= 1e-8 && mono <= 1e-12,
        format!("N'=4..13: |block_1 - base| {eq1:.2e}, |sup_d>=2 - interior| {eq2:.2e}, largest increase {mono:.2e}"),
    )
}

fn criterion_7() -> Outcome {
    for n in 2..=10 {
        let rep = verify_eigen(n).unwrap();
        if !rep.passes() {
            return outcome(false, format!("N={n}: {}", rep.verdict));
        }
    }
    outcome(
        true,
        "N=2..10: every eigenvector exact, spectrum and eigenspace dimensions match",
    )
}

fn uniform2(a: f64) -> Matrix {
    Matrix::from_rows(&[vec![a / 2.0, a / 2.0], vec![a / 2.0, a / 2.0]])
}

/// N = 2: axis blocks with Perron roots `a`, `b`, interior stay `c`, leak `rho` to each axis.
fn pattern(a: f64, b: f64, c: f64, rho: f64) -> A2dmcSpec {
    let r = Matrix::from_rows(&[vec![rho / 2.0, rho / 2.0]]);
    from_blocks(2, &uniform2(a), &uniform2(b), &Matrix::from_rows(&[vec![c]]), &r, &r).unwrap()
}

fn worked_example() -> A2dmcSpec {
    let q = Matrix::from_rows(&[vec![0.2, 0.1], vec![0.1, 0.2]]);
    let r1 = Matrix::from_rows(&[vec![0.15, 0.05]]);
    let r2 = Matrix::from_rows(&[vec![0.05, 0.15]]);
    from_blocks(2, &q, &q, &Matrix::from_rows(&[vec![0.6]]), &r1, &r2).unwrap()
}

const MC_TRIALS: usize = 1_000_000;

fn criterion_8() -> Outcome {
    let fixtures = [
        (
            "strong type 1",
            pattern(0.995, 0.85, 0.85, 0.02),
            YaglomCase::StrongType1,
        ),
        (
            "strong type 2",
            pattern(0.85, 0.995, 0.85, 0.02),
            YaglomCase::StrongType2,
        ),
        ("coexistence", pattern(0.85, 0.8, 0.995, 0.002), YaglomCase::Coexistence),
        ("worked example", worked_example(), YaglomCase::Coexistence),
        (
            "tie above Q3",
            pattern(0.995, 0.995, 0.85, 0.02),
            YaglomCase::TieAboveQ3,
        ),
        (
            "tie equal Q3",
            pattern(0.995, 0.995, 0.995, 0.002),
            YaglomCase::TieEqualsQ3,
        ),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, (name, spec, expected)) in fixtures.iter().enumerate() {
        let rep = yaglom_limit(spec, (1, 1)).unwrap();
        let exact = conditional_law_exact(spec, (1, 1), 200).unwrap();
        let tv_exact = total_variation(&exact.distribution, &rep.distribution);
        // Horizon 200 unless fewer than 1e4 of the trials would survive that long.
        let horizon = (1..=200)
            .rev()
            .find(|&h| {
                let law = conditional_law_exact(spec, (1, 1), h).unwrap();
                MC_TRIALS as f64 * law.log_survival.exp() >= 1e4
            })
            .unwrap_or(1);
        let sampler = GeneralSampler::new(spec.index.clone(), &spec.pi).unwrap();
        let mc = sample_conditional(
            &sampler,
            (1, 1),
            horizon,
            MC_TRIALS,
            8000 + k as u64,
            Execution::default(),
        )
        .unwrap();
        let tv_mc = total_variation(&mc.distribution, &rep.distribution);
        let at_horizon = conditional_law_exact(spec, (1, 1), horizon).unwrap();
        let tv_sampler = total_variation(&mc.distribution, &at_horizon.distribution);
        let mut ok = rep.case == *expected && tv_exact <= 1e-8 && tv_mc <= 5e-3;
        if *name == "worked example" {
            let w1 = rep.eigen_data.as_ref().and_then(|e| e.w1.clone()).unwrap_or_default();
            ok &= (rep.interior_mass(spec) - 3.0 / 7.0).abs() < 1e-12
                && w1.len() == 2
                && (w1[0] - 13.0 / 30.0).abs() < 1e-12
                && (w1[1] - 7.0 / 30.0).abs() < 1e-12;
        }
        pass &= ok;
        parts.push(format!(
            "{name}: {} exact TV {tv_exact:.1e}, MC TV {tv_mc:.1e} (h={horizon}, {} survivors, {tv_sampler:.1e} from the exact law at h)",
            if ok { "ok" } else { "FAIL" },
            mc.survivors
        ));
    }
    outcome(pass, parts.join("; "))
}

fn random_block(rng: &mut SplitMix, rows: usize, cols: usize, row_sum: (f64, f64)) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for r in 0..rows {
        let target = row_sum.0 + (row_sum.1 - row_sum.0) * rng.next_f64();
        let raw: Vec<f64> = (0..cols).map(|_| 0.2 + rng.next_f64()).collect();
        let s: f64 = raw.iter().sum();
        for (c, v) in raw.into_iter().enumerate() {
            m[(r, c)] = target * v / s;
        }
    }
    m
}

/// N = 3 chains whose interior Perron root sits just above or just below the axis roots.
fn straddling_fixture(seed: u64) -> (A2dmcSpec, f64) {
    let mut rng = SplitMix::stream(seed, 9);
    let q1 = random_block(&mut rng, 3, 3, (0.5, 0.7));
    let q2 = random_block(&mut rng, 3, 3, (0.5, 0.7));
    let top = perron_pair(&q1, 1e-13)
        .unwrap()
        .theta
        .max(perron_pair(&q2, 1e-13).unwrap().theta);
    let gap = 0.002 + 0.04 * rng.next_f64();
    let delta = if seed.is_multiple_of(2) { gap } else { -gap };
    let m3 = random_block(&mut rng, 3, 3, (0.45, 0.55));
    let q3 = m3.scale(top * (1.0 + delta) / perron_pair(&m3, 1e-13).unwrap().theta);
    let r1 = random_block(&mut rng, 3, 3, (0.01, 0.04));
    let r2 = random_block(&mut rng, 3, 3, (0.01, 0.04));
    (from_blocks(3, &q1, &q2, &q3, &r1, &r2).unwrap(), delta)
}

fn criterion_9() -> Outcome {
    let mut worst = 0.0f64;
    let mut with_interior = 0;
    for seed in 0..30u64 {
        let (spec, delta) = straddling_fixture(seed);
        let set = match enumerate_qsd(&spec) {
            Ok(s) => s,
            Err(e) => return outcome(false, format!("fixture {seed}: {e}")),
        };
        for q in &set.measures {
            worst = worst.max(qsd_residual(&spec, &q.measure, q.theta));
            let mass: f64 = q.measure.iter().sum();
            if (mass - 1.0).abs() > 1e-12 || q.measure.iter().any(|&v| v < 0.0) {
                return outcome(
                    false,
                    format!("fixture {seed}: {:?} is not a probability measure", q.kind),
                );
            }
        }
        let above = set.theta[2] > set.theta[0].max(set.theta[1]);
        if above != (delta > 0.0) || set.has_interior() != above {
            return outcome(
                false,
                format!(
                    "fixture {seed}: interior QSD {} with theta {:?}",
                    set.has_interior(),
                    set.theta
                ),
            );
        }
        // Independent check: the candidate interior measure is nonnegative exactly when θ3 dominates.
        let p3 = perron_pair(&spec.q3, 1e-13).unwrap();
        let candidate_ok = [(&spec.q1, &spec.r1), (&spec.q2, &spec.r2)].iter().all(|(q, r)| {
            let rhs = r.vec_mul(&p3.v);
            let lu = neutral_spectra::linalg::Lu::new(&q.shifted_negative(p3.theta)).unwrap();
            lu.solve_left(&rhs).iter().all(|&v| v >= 0.0)
        });
        if candidate_ok != above {
            return outcome(
                false,
                format!("fixture {seed}: direct solve disagrees (nonnegative {candidate_ok})"),
            );
        }
        with_interior += set.measures.iter().filter(|q| q.kind == QsdKind::Interior).count();
    }
    outcome(
        worst <= 1e-10,
        format!("30 fixtures, {with_interior} with an interior QSD; max |nu Q - theta nu| {worst:.2e}"),
    )
}

fn neutral_six() -> KernelSpec {
    KernelSpec::birth_death(
        &[0.30, 0.28, 0.25, 0.22, 0.20, 0.0],
        &[0.20, 0.22, 0.25, 0.28, 0.30, 0.35],
        6,
    )
    .unwrap()
}

fn criterion_10() -> Outcome {
    let k = neutral_six();
    let a = neutral_spectra::qsd::extract_blocks(&lift_full(&k).unwrap().pi).unwrap();
    let t1 = perron_pair(&a.q1, 1e-13).unwrap().theta;
    let t3 = perron_pair(&a.q3, 1e-13).unwrap().theta;
    let margin = t1 - t3;
    let seeds: Vec<u64> = (0..100).collect();
    let verdicts = perturb_batch(&k, 1e-3, &seeds, Execution::default()).unwrap();
    let held = verdicts.iter().filter(|v| v.no_coexistence).count();
    let smallest = verdicts.iter().map(|v| v.margin).fold(f64::INFINITY, f64::min);
    outcome(
        margin >= 1e-2 && held == 100,
        format!("neutral margin {margin:.4}; no coexistence in {held}/100, smallest perturbed margin {smallest:.4}"),
    )
}

type Entry = (u32, fn() -> Outcome, Duration);

#[test]
fn acceptance_criteria() {
    let criteria: [Entry; 10] = [
        (1, criterion_1, Duration::from_secs(1)),
        (2, criterion_2, Duration::from_secs(10)),
        (3, criterion_3, Duration::from_secs(10)),
        (4, criterion_4, Duration::from_secs(60)),
        (5, criterion_5, Duration::from_secs(60)),
        (6, criterion_6, Duration::from_secs(120)),
        (7, criterion_7, Duration::from_secs(60)),
        (8, criterion_8, Duration::from_secs(300)),
        (9, criterion_9, Duration::from_secs(60)),
        (10, criterion_10, Duration::from_secs(60)),
    ];
    let mut failed = Vec::new();
    for (n, f, budget) in criteria {
        let start = Instant::now();
        let out = f();
        let took = start.elapsed();
        let pass = out.pass && took < budget;
        println!(
            "criterion {n}: {} ({:.2}s of {}s) {}",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            budget.as_secs(),
            out.detail
        );
        if !pass {
            failed.push(n);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
