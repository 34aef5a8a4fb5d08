//! Chain specification files (JSON) and sparse CSV for matrices over the triangle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::lift::{lift_full, BlockMatrix, TriIndex};
use crate::linalg::Matrix;
use crate::moran::{transition_matrix, MoranSpec};
use crate::qsd::{extract_blocks, A2dmcSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseEntry {
    pub from: [usize; 2],
    pub to: [usize; 2],
    pub prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChainSpecFile {
    /// A one-dimensional kernel on `{0..N}` given densely.
    General { rows: Vec<Vec<f64>> },
    /// Birth and death probabilities for `k = 1..=N`.
    BirthDeath {
        p: Vec<f64>,
        q: Vec<f64>,
        #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
    },
    Moran3 {
        #[serde(rename = "N")]
        n: usize,
    },
    /// A two-dimensional chain on the triangle, listed sparsely.
    A2dmc {
        #[serde(rename = "N")]
        n: usize,
        entries: Vec<SparseEntry>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum LoadedChain {
    Kernel(KernelSpec),
    Moran(MoranSpec),
    Absorbed(Box<A2dmcSpec>),
}

impl LoadedChain {
    /// The chain as an absorbed two-dimensional chain, lifting kernels first.
    pub fn absorbed(&self) -> Result<A2dmcSpec> {
        match self {
            LoadedChain::Kernel(k) => extract_blocks(&lift_full(k)?.pi),
            LoadedChain::Moran(m) => extract_blocks(&m.matrix()),
            LoadedChain::Absorbed(a) => Ok((**a).clone()),
        }
    }

    pub fn kernel(&self) -> Result<&KernelSpec> {
        match self {
            LoadedChain::Kernel(k) => Ok(k),
            _ => Err(Error::Input(
                "this command needs a one-dimensional kernel (general or birth_death)".into(),
            )),
        }
    }
}

fn key_line(text: &str, key: &str) -> usize {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map_or(1, |p| p + 1)
}

fn anchored(text: &str, key: &str, err: Error) -> Error {
    let line = key_line(text, key);
    match err {
        Error::Validation(m) => Error::Validation(format!("line {line}: {m}")),
        Error::Structure(m) => Error::Structure(format!("line {line}: {m}")),
        Error::Input(m) => Error::Input(format!("line {line}: {m}")),
        other => other,
    }
}

pub fn parse_chain_spec(text: &str) -> Result<ChainSpecFile> {
    serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        let msg = msg.rsplit_once(" at line ").map_or(msg.as_str(), |(m, _)| m);
        Error::Input(format!("line {}, column {}: {msg}", e.line(), e.column()))
    })
}

pub fn load_chain(text: &str) -> Result<LoadedChain> {
    match parse_chain_spec(text)? {
        ChainSpecFile::General { rows } => KernelSpec::from_rows(rows)
            .map(LoadedChain::Kernel)
            .map_err(|e| anchored(text, "rows", e)),
        ChainSpecFile::BirthDeath { p, q, n } => {
            let size = n.unwrap_or(p.len());
            KernelSpec::birth_death(&p, &q, size)
                .map(LoadedChain::Kernel)
                .map_err(|e| anchored(text, "p", e))
        }
        ChainSpecFile::Moran3 { n } => transition_matrix(n)
            .map(LoadedChain::Moran)
            .map_err(|e| anchored(text, "N", e)),
        ChainSpecFile::A2dmc { n, entries } => a2dmc_matrix(n, &entries)
            .and_then(|(_, m)| extract_blocks(&m))
            .map(|a| LoadedChain::Absorbed(Box::new(a)))
            .map_err(|e| anchored(text, "entries", e)),
    }
}

pub fn read_chain(path: &std::path::Path) -> Result<LoadedChain> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    load_chain(&text).map_err(|e| match e {
        Error::Input(m) => Error::Input(format!("{}: {m}", path.display())),
        Error::Validation(m) => Error::Validation(format!("{}: {m}", path.display())),
        Error::Structure(m) => Error::Structure(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Dense matrix from sparse entries; `(0,0)` is made absorbing when it has no entries.
pub fn a2dmc_matrix(n: usize, entries: &[SparseEntry]) -> Result<(TriIndex, Matrix)> {
    if n == 0 || n > crate::lift::MAX_N {
        return Err(Error::Validation(format!("N = {n} outside 1..={}", crate::lift::MAX_N)));
    }
    let index = TriIndex::new(n);
    let mut m = Matrix::zeros(index.size(), index.size());
    let mut seen = vec![false; index.size() * index.size()];
    for (k, e) in entries.iter().enumerate() {
        let locate = |s: [usize; 2]| {
            index.try_index(s[0], s[1]).ok_or_else(|| {
                Error::Validation(format!(
                    "entry {k}: state ({},{}) outside the triangle i+j <= {n}",
                    s[0], s[1]
                ))
            })
        };
        let (r, c) = (locate(e.from)?, locate(e.to)?);
        if seen[r * index.size() + c] {
            return Err(Error::Validation(format!(
                "entry {k}: duplicate transition ({},{}) -> ({},{})",
                e.from[0], e.from[1], e.to[0], e.to[1]
            )));
        }
        seen[r * index.size() + c] = true;
        m[(r, c)] = e.prob;
    }
    if m.row(0).iter().all(|&v| v == 0.0) {
        m[(0, 0)] = 1.0;
    }
    Ok((index, m))
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_value(v: f64) -> String {
    format!("{v:?}")
}

/// `i,j,k,l,value`, one line per nonzero entry in lexicographic order.
pub fn matrix_csv(index: &TriIndex, m: &Matrix) -> String {
    let mut out = String::from("i,j,k,l,value\n");
    let mut order: Vec<usize> = (0..index.size()).collect();
    order.sort_by_key(|&s| index.state(s));
    for &r in &order {
        let (i, j) = index.state(r);
        for &c in &order {
            let v = m[(r, c)];
            if v != 0.0 {
                let (k, l) = index.state(c);
                out.push_str(&format!("{i},{j},{k},{l},{}\n", format_value(v)));
            }
        }
    }
    out
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize, name: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Input(format!("line {line}: cannot parse {name} from {s:?}")))
}

/// Inverse of [`matrix_csv`]; `N` is the largest `i + j` among the rows.
pub fn parse_matrix_csv(text: &str) -> Result<(TriIndex, Matrix)> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "i,j,k,l,value" => {}
        _ => return Err(Error::Input("line 1: expected header i,j,k,l,value".into())),
    }
    let mut entries = Vec::new();
    for (k, line) in lines {
        let line_no = k + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(Error::Input(format!(
                "line {line_no}: expected 5 fields, got {}",
                f.len()
            )));
        }
        let from = [parse_field(f[0], line_no, "i")?, parse_field(f[1], line_no, "j")?];
        let to = [parse_field(f[2], line_no, "k")?, parse_field(f[3], line_no, "l")?];
        let prob: f64 = parse_field(f[4], line_no, "value")?;
        entries.push((line_no, SparseEntry { from, to, prob }));
    }
    let n = entries
        .iter()
        .map(|(_, e)| (e.from[0] + e.from[1]).max(e.to[0] + e.to[1]))
        .max()
        .ok_or_else(|| Error::Input("no entries".into()))?;
    let index = TriIndex::new(n);
    let mut m = Matrix::zeros(index.size(), index.size());
    for (_, e) in &entries {
        m[(index.index(e.from[0], e.from[1]), index.index(e.to[0], e.to[1]))] = e.prob;
    }
    Ok((index, m))
}

/// `n,m,value` over populations `d..=N`.
pub fn block_csv(block: &BlockMatrix) -> String {
    let mut out = String::from("n,m,value\n");
    for (a, n) in block.populations().enumerate() {
        for (b, m) in block.populations().enumerate() {
            let v = block.matrix[(a, b)];
            if v != 0.0 {
                out.push_str(&format!("{n},{m},{}\n", format_value(v)));
            }
        }
    }
    out
}

/// `i,j,value` for every state of the triangle.
pub fn distribution_csv(index: &TriIndex, dist: &[f64]) -> String {
    let mut out = String::from("i,j,value\n");
    let mut order: Vec<usize> = (0..index.size()).collect();
    order.sort_by_key(|&s| index.state(s));
    for s in order {
        let (i, j) = index.state(s);
        out.push_str(&format!("{i},{j},{}\n", format_value(dist[s])));
    }
    out
}
