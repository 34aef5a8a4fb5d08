use thiserror::Error;

use crate::poly::PoleError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("structure error: {0}")]
    Structure(String),
    #[error("kernel not reversible: detailed balance fails on ({i}, {j}) with relative defect {defect:.3e}")]
    NotReversible { i: usize, j: usize, defect: f64 },
    #[error("matrix not symmetrizable: relative defect {defect:.3e} at ({i}, {j})")]
    NotSymmetrizable { i: usize, j: usize, defect: f64 },
    #[error("matrix not irreducible: states {witness:?} cannot reach the rest")]
    NotIrreducible { witness: Vec<usize> },
    #[error("hypothesis error: {0}")]
    Hypothesis(String),
    #[error("empty domain: S*_{k} has no states")]
    EmptyDomain { k: usize },
    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("computation cancelled")]
    Cancelled,
    #[error("degenerate: {0}")]
    Degenerate(String),
    #[error("no trajectory survived to horizon {horizon}")]
    NoSurvivors { horizon: usize },
    #[error("(N - X) does not divide the degree-{deg} Hahn polynomial for d={d}, n={n}")]
    DivisionRemainder { n: usize, d: usize, deg: usize },
    #[error(transparent)]
    Pole(#[from] PoleError),
    #[error("input error: {0}")]
    Input(String),
}

impl Error {
    /// Process exit code: 1 for bad input, 2 for unmet hypotheses, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_)
            | Error::Structure(_)
            | Error::EmptyDomain { .. }
            | Error::Pole(_)
            | Error::Input(_) => 1,
            Error::NotReversible { .. }
            | Error::NotSymmetrizable { .. }
            | Error::NotIrreducible { .. }
            | Error::Hypothesis(_) => 2,
            Error::NoConvergence { .. }
            | Error::Cancelled
            | Error::Degenerate(_)
            | Error::NoSurvivors { .. }
            | Error::DivisionRemainder { .. } => 3,
        }
    }
}
