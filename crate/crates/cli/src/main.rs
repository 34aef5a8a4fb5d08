use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use neutral_spectra::dirichlet::ordering_report;
use neutral_spectra::io::{block_csv, distribution_csv, matrix_csv, read_chain, LoadedChain};
use neutral_spectra::kernel::reversible_measure;
use neutral_spectra::lift::{lift_block, lift_full};
use neutral_spectra::moran::{transition_matrix, verify_eigen};
use neutral_spectra::poly::build_p;
use neutral_spectra::qsd::{enumerate_qsd, qsd_residual, yaglom_limit};
use neutral_spectra::sim::{sample_conditional, GeneralSampler, NeutralSampler};
use neutral_spectra::spectral::{assemble_basis, compare_truncation, spectral_radius};
use neutral_spectra::{Error, Execution};

type Result<T> = std::result::Result<T, Error>;

#[derive(Parser, Debug)]
#[command(
    name = "neutral-spectra",
    version,
    about = "Spectra and Yaglom limits of neutral two-dimensional Markov chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Chain specification (JSON).
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Directory for report and CSV artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 100_000)]
    trials: usize,
    #[arg(long, global = true, default_value_t = 200)]
    horizon: usize,
    /// Initial state as `i,j`.
    #[arg(long, global = true, value_parser = parse_state)]
    initial: Option<(usize, usize)>,
    #[arg(long, global = true)]
    d: Option<usize>,
    /// Truncation level for truncate-compare.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Ball count for the urn.
    #[arg(long = "N", global = true)]
    balls: Option<usize>,
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,
    #[arg(long, global = true)]
    csv: bool,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Check a chain specification.
    Validate,
    /// Lift a one-dimensional kernel to the triangle.
    Lift,
    /// The blocks Π_d of a lifted kernel.
    Blocks,
    /// Assemble and check the eigenbasis of the lifted chain.
    Spectrum,
    /// Dirichlet eigenvalues against block eigenvalues.
    Dirichlet,
    /// Quasi-stationary distributions of an absorbed chain.
    Qsd,
    /// Yaglom limit from an initial state.
    Yaglom,
    /// Monte Carlo law conditioned on survival.
    Simulate,
    /// Exact verification of the three-color urn.
    Moran,
    /// Norms between a kernel and its truncations.
    TruncateCompare,
    /// Print the polynomial P_d.
    Poly,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Lift => "lift",
            Command::Blocks => "blocks",
            Command::Spectrum => "spectrum",
            Command::Dirichlet => "dirichlet",
            Command::Qsd => "qsd",
            Command::Yaglom => "yaglom",
            Command::Simulate => "simulate",
            Command::Moran => "moran",
            Command::TruncateCompare => "truncate-compare",
            Command::Poly => "poly",
        }
    }
}

fn parse_state(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected i,j, got {s:?}"))?;
    let i = a.trim().parse().map_err(|_| format!("bad coordinate {a:?}"))?;
    let j = b.trim().parse().map_err(|_| format!("bad coordinate {b:?}"))?;
    Ok((i, j))
}

/// What a command produced: a JSON report, a text rendering and optional CSV files.
struct Output {
    report: Value,
    text: String,
    csv: Vec<(String, String)>,
}

impl Output {
    fn new(report: Value, text: String) -> Self {
        Self {
            report,
            text,
            csv: Vec::new(),
        }
    }

    fn with_csv(mut self, name: impl Into<String>, body: String) -> Self {
        self.csv.push((name.into(), body));
        self
    }
}

fn chain(cli: &Cli) -> Result<LoadedChain> {
    let path = cli
        .input
        .as_deref()
        .ok_or_else(|| Error::Input("--input PATH is required".into()))?;
    read_chain(path)
}

fn need<T: Copy>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| Error::Input(format!("{flag} is required")))
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize")
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn validate(cli: &Cli) -> Result<Output> {
    let loaded = chain(cli)?;
    let (kind, n, extra) = match &loaded {
        LoadedChain::Kernel(k) => {
            let reversible = reversible_measure(k).is_ok();
            (
                "kernel",
                k.n(),
                json!({ "reversible": reversible, "tridiagonal": k.is_tridiagonal() }),
            )
        }
        LoadedChain::Moran(m) => ("moran3", m.n, json!({})),
        LoadedChain::Absorbed(a) => ("a2dmc", a.n(), json!({ "hypotheses": to_value(&a.hypotheses) })),
    };
    let report = json!({ "valid": true, "kind": kind, "N": n, "details": extra });
    Ok(Output::new(report, format!("valid {kind} with N = {n}\n")))
}

fn lift(cli: &Cli) -> Result<Output> {
    let loaded = chain(cli)?;
    let k = loaded.kernel()?;
    let c = lift_full(k)?;
    let worst = c.pi.row_sums().iter().fold(0.0f64, |m, s| m.max((s - 1.0).abs()));
    let csv = matrix_csv(&c.index, &c.pi);
    let report = json!({ "N": c.n(), "states": c.index.size(), "max_row_sum_defect": worst });
    Ok(Output::new(report, csv.clone()).with_csv("lifted.csv", csv))
}

fn blocks(cli: &Cli) -> Result<Output> {
    let loaded = chain(cli)?;
    let k = loaded.kernel()?;
    let ds: Vec<usize> = match cli.d {
        Some(d) => vec![d],
        None => (1..=k.n()).collect(),
    };
    let mut rows = Vec::new();
    let mut text = String::new();
    let mut out = Output::new(Value::Null, String::new());
    for d in ds {
        let b = lift_block(k, d)?;
        let rho = spectral_radius(&b.matrix)?;
        text.push_str(&format!(
            "d = {d}: populations {}..={}, spectral radius {rho}\n",
            d,
            k.n()
        ));
        rows.push(json!({ "d": d, "size": b.matrix.rows(), "spectral_radius": rho }));
        out = out.with_csv(format!("block_{d}.csv"), block_csv(&b));
    }
    if cli.d.is_some() && cli.csv {
        text = out.csv[0].1.clone();
    }
    out.report = json!({ "N": k.n(), "blocks": rows });
    out.text = text;
    Ok(out)
}

fn spectrum(cli: &Cli) -> Result<Output> {
    let loaded = chain(cli)?;
    let k = loaded.kernel()?;
    let mu = reversible_measure(k)?;
    let c = lift_full(k)?;
    let basis = assemble_basis(k, &mu)?;
    let check = basis.check(&c);
    let tol = cli.tol.max(1e-8);
    let passes = check.passes(tol);
    let eigen: Vec<Value> = basis
        .vectors
        .iter()
        .map(|v| json!({ "d": v.d, "theta": v.theta }))
        .collect();
    let report = json!({
        "N": k.n(),
        "count": check.count,
        "expected": check.expected,
        "max_residual": check.max_residual,
        "min_singular_value": check.min_singular_value,
        "passes": passes,
        "eigenvalues": eigen,
    });
    let text = format!(
        "{} eigenvectors (expected {}), max residual {:.3e}, smallest singular value {:.3e}: {}\n",
        check.count,
        check.expected,
        check.max_residual,
        check.min_singular_value,
        if passes { "basis ok" } else { "basis check failed" }
    );
    Ok(Output::new(report, text))
}

fn dirichlet(cli: &Cli) -> Result<Output> {
    let loaded = chain(cli)?;
    let rep = ordering_report(loaded.kernel()?)?;
    let mut text = String::new();
    for c in &rep.checks {
        text.push_str(&format!("{:<28} margin {:+.3e}  {:?}\n", c.name, c.margin, c.verdict));
    }
    text.push_str(&format!(
        "{} checks, {} violated{}\n",
        rep.checks.len(),
        rep.violations().len(),
        if rep.degenerate { ", degenerate kernel" } else { "" }
    ));
    Ok(Output::new(to_value(&rep), text))
}

fn qsd(cli: &Cli) -> Result<Output> {
    let a = chain(cli)?.absorbed()?;
    let set = enumerate_qsd(&a)?;
    let residuals: Vec<f64> = set
        .measures
        .iter()
        .map(|q| qsd_residual(&a, &q.measure, q.theta))
        .collect();
    let mut report = to_value(&set);
    report["residuals"] = to_value(&residuals);
    let mut text = format!("theta = {:?}\n", set.theta);
    for (q, r) in set.measures.iter().zip(&residuals) {
        text.push_str(&format!("{:?} QSD, theta {}, residual {:.3e}\n", q.kind, q.theta, r));
    }
    text.push_str(&format!("mixtures are QSDs: {}\n", set.mixtures_are_qsd));
    let mut out = Output::new(report, text);
    for (k, q) in set.measures.iter().enumerate() {
        out = out.with_csv(format!("qsd_{k}.csv"), distribution_csv(&a.index, &q.measure));
    }
    Ok(out)
}

fn yaglom(cli: &Cli) -> Result<Output> {
    let a = chain(cli)?.absorbed()?;
    let initial = need(cli.initial, "--initial i,j")?;
    let rep = yaglom_limit(&a, initial)?;
    let csv = distribution_csv(&a.index, &rep.distribution);
    let mut text = format!("case: {} ({:?})\ntheta = {:?}\n", rep.case_label, rep.case, rep.theta);
    if let Some(p) = rep.p_ij {
        text.push_str(&format!("p_{}_{} = {p}\n", initial.0, initial.1));
    }
    if let Some(q) = rep.q {
        text.push_str(&format!("q = {q}\n"));
    }
    if let Some(w) = &rep.warning {
        text.push_str(&format!(
            "warning: {}; alternative: {}\n",
            w.message, w.alternative_label
        ));
    }
    text.push_str(&format!("interior mass = {}\n", rep.interior_mass(&a)));
    if cli.csv {
        text = csv.clone();
    }
    Ok(Output::new(to_value(&rep), text).with_csv("yaglom.csv", csv))
}

fn simulate(cli: &Cli) -> Result<Output> {
    let loaded = chain(cli)?;
    let initial = need(cli.initial, "--initial i,j")?;
    let exec = Execution::default();
    let (index, rep) = match &loaded {
        LoadedChain::Kernel(k) => {
            let s = NeutralSampler::new(k);
            let rep = sample_conditional(&s, initial, cli.horizon, cli.trials, cli.seed, exec)?;
            (neutral_spectra::TriIndex::new(k.n()), rep)
        }
        other => {
            let a = other.absorbed()?;
            let s = GeneralSampler::new(a.index.clone(), &a.pi)?;
            (
                a.index.clone(),
                sample_conditional(&s, initial, cli.horizon, cli.trials, cli.seed, exec)?,
            )
        }
    };
    let csv = distribution_csv(&index, &rep.distribution);
    let text = if cli.csv {
        csv.clone()
    } else {
        format!(
            "{} of {} trials survived {} steps from ({},{}) (seed {})\n",
            rep.survivors, rep.trials, rep.horizon, initial.0, initial.1, rep.seed
        )
    };
    Ok(Output::new(to_value(&rep), text).with_csv("simulate.csv", csv))
}

fn moran(cli: &Cli) -> Result<Output> {
    let n = need(cli.balls, "--N")?;
    let rep = verify_eigen(n)?;
    let m = transition_matrix(n)?;
    let text = format!(
        "N = {n}: {} eigenvectors, basis rank {}: {}\n",
        rep.eigenvectors, rep.basis_rank, rep.verdict
    );
    Ok(Output::new(to_value(&rep), text).with_csv("moran.csv", matrix_csv(&m.index, &m.matrix())))
}

fn truncate_compare(cli: &Cli) -> Result<Output> {
    let loaded = chain(cli)?;
    let k = loaded.kernel()?;
    let mu = reversible_measure(k)?;
    let levels: Vec<usize> = match cli.k {
        Some(n_prime) => vec![n_prime],
        None => (1..k.n()).collect(),
    };
    let mut rows = Vec::new();
    let mut text = String::from("N'  base        block_1     sup_d>=2    interior\n");
    for n_prime in levels {
        let t = compare_truncation(k, &mu, n_prime)?;
        text.push_str(&format!(
            "{:<3} {:.4e}  {:.4e}  {:.4e}  {:.4e}\n",
            n_prime,
            t.base,
            t.blocks[0],
            t.sup_high_blocks(),
            t.interior
        ));
        rows.push(t);
    }
    Ok(Output::new(json!({ "N": k.n(), "rows": to_value(&rows) }), text))
}

fn poly(cli: &Cli) -> Result<Output> {
    let d = need(cli.d, "--d")?;
    let p = build_p(d as u32);
    let core: Vec<Value> = p
        .core
        .terms()
        .map(|(&(i, j), c)| json!({ "i": i, "j": j, "coeff": c.to_string() }))
        .collect();
    let report = json!({
        "d": d,
        "sign": p.sign,
        "scale_sq": p.scale_sq.to_string(),
        "core": core,
        "text": p.to_string(),
    });
    Ok(Output::new(report, format!("P_{d} = {p}\n")))
}

fn write_artifacts(dir: &Path, name: &str, out: &Output) -> Result<()> {
    let io = |e: std::io::Error| Error::Input(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    std::fs::write(dir.join(format!("{name}.json")), pretty(&out.report) + "\n").map_err(io)?;
    for (file, body) in &out.csv {
        std::fs::write(dir.join(file), body).map_err(io)?;
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<Output> {
    if cli.tol.is_nan() || cli.tol <= 0.0 {
        return Err(Error::Validation(format!("--tol must be positive, got {}", cli.tol)));
    }
    match cli.command {
        Command::Validate => validate(cli),
        Command::Lift => lift(cli),
        Command::Blocks => blocks(cli),
        Command::Spectrum => spectrum(cli),
        Command::Dirichlet => dirichlet(cli),
        Command::Qsd => qsd(cli),
        Command::Yaglom => yaglom(cli),
        Command::Simulate => simulate(cli),
        Command::Moran => moran(cli),
        Command::TruncateCompare => truncate_compare(cli),
        Command::Poly => poly(cli),
    }
}

fn configure_threads() {
    #[cfg(feature = "parallel")]
    if let Some(n) = std::env::var("NEUTRAL_SPECTRA_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn run(args: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    let out = match execute(&cli) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    if let Some(dir) = &cli.out {
        if let Err(e) = write_artifacts(dir, cli.command.name(), &out) {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    }
    let body = if cli.json { pretty(&out.report) + "\n" } else { out.text };
    let mut stdout = std::io::stdout().lock();
    if stdout.write_all(body.as_bytes()).and_then(|_| stdout.flush()).is_err() {
        return 1;
    }
    0
}

fn main() {
    std::process::exit(run(std::env::args().collect()));
}
