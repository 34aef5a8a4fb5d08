//! Spectral analysis of neutral two-dimensional Markov chains and Yaglom limits
//! of absorbed two-dimensional chains.
//!
//! The crate is organised bottom-up:
//!
//! * [`poly`] builds the universal eigen-polynomials `P_d` and Hahn polynomials exactly;
//! * [`kernel`] validates one-dimensional kernels and finds reversible measures;
//! * [`lift`] constructs the two-dimensional chain, its blocks `Π_d` and truncations;
//! * [`spectral`] holds the eigensolvers, Perron pairs and the assembled eigenbasis;
//! * [`dirichlet`] compares Dirichlet eigenvalues with block eigenvalues;
//! * [`qsd`] computes quasi-stationary distributions and Yaglom limits;
//! * [`sim`] is the Monte Carlo side;
//! * [`moran`] is the exact three-colour urn fixture;
//! * [`io`] reads chain specifications and writes CSV.

pub mod dirichlet;
pub mod error;
pub mod exact;
pub mod io;
pub mod kernel;
pub mod lift;
pub mod linalg;
pub mod moran;
pub mod par;
pub mod poly;
pub mod qsd;
pub mod rng;
pub mod sim;
pub mod spectral;

pub use error::Error;
pub use kernel::{KernelSpec, ReversibleMeasure};
pub use lift::{LiftedChain, TriIndex};
pub use par::Execution;
pub use poly::{build_p, eval_p, ScaledPoly};
pub use qsd::{A2dmcSpec, YaglomReport};
