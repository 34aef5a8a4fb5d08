//! Monte Carlo for lifted and general two-dimensional chains.
//!
//! Trial `t` draws from `SplitMix::stream(seed, t)`, and counts are merged in trial order,
//! so results do not depend on the thread count.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::lift::TriIndex;
use crate::linalg::Matrix;
use crate::par::{map_range, Execution};
use crate::rng::SplitMix;

const CHUNK: usize = 4096;

pub trait Stepper: Sync {
    fn index(&self) -> &TriIndex;
    /// One transition from the state with triangle index `from`.
    fn step(&self, from: usize, rng: &mut SplitMix) -> usize;
}

fn cumulative(row: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = row
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    // Guard against rows that sum to 1 - ulp.
    if let Some(top) = row.iter().rposition(|&p| p > 0.0) {
        out[top..].iter_mut().for_each(|v| *v = f64::INFINITY);
    }
    out
}

fn draw(cdf: &[f64], rng: &mut SplitMix) -> usize {
    let u = rng.next_f64();
    cdf.partition_point(|&c| c <= u)
}

/// The lift of a one-dimensional kernel, sampled without building the lifted matrix:
/// births pick a parent type in proportion to the current counts, deaths remove
/// uniformly chosen individuals one at a time.
pub struct NeutralSampler {
    index: TriIndex,
    rows: Vec<Vec<f64>>,
}

impl NeutralSampler {
    pub fn new(spec: &KernelSpec) -> Self {
        let n = spec.n();
        Self {
            index: TriIndex::new(n),
            rows: (0..=n).map(|s| cumulative(spec.matrix().row(s))).collect(),
        }
    }
}

impl Stepper for NeutralSampler {
    fn index(&self) -> &TriIndex {
        &self.index
    }

    fn step(&self, from: usize, rng: &mut SplitMix) -> usize {
        let (mut i, mut j) = self.index.state(from);
        let s = i + j;
        if s == 0 {
            return from;
        }
        let m = draw(&self.rows[s], rng);
        if m > s {
            for _ in s..m {
                if rng.below((i + j) as u64) < i as u64 {
                    i += 1;
                } else {
                    j += 1;
                }
            }
        } else {
            for _ in m..s {
                if rng.below((i + j) as u64) < i as u64 {
                    i -= 1;
                } else {
                    j -= 1;
                }
            }
        }
        self.index.index(i, j)
    }
}

/// Any stochastic matrix on the triangle.
pub struct GeneralSampler {
    index: TriIndex,
    rows: Vec<Vec<f64>>,
}

impl GeneralSampler {
    pub fn new(index: TriIndex, pi: &Matrix) -> Result<Self> {
        if pi.rows() != index.size() || !pi.is_square() {
            return Err(Error::Structure(format!(
                "matrix is {}x{}, expected {} states",
                pi.rows(),
                pi.cols(),
                index.size()
            )));
        }
        Ok(Self {
            rows: (0..pi.rows()).map(|r| cumulative(pi.row(r))).collect(),
            index,
        })
    }
}

impl Stepper for GeneralSampler {
    fn index(&self) -> &TriIndex {
        &self.index
    }

    fn step(&self, from: usize, rng: &mut SplitMix) -> usize {
        draw(&self.rows[from], rng)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimReport {
    pub initial: (usize, usize),
    pub horizon: usize,
    pub trials: usize,
    pub seed: u64,
    pub survivors: u64,
    /// End-state counts of surviving trials, indexed like the triangle.
    pub counts: Vec<u64>,
    /// `counts / survivors`.
    pub distribution: Vec<f64>,
}

fn merge_counts<F>(exec: Execution, size: usize, trials: usize, run: F) -> Vec<u64>
where
    F: Fn(usize) -> Option<usize> + Sync + Send,
{
    let chunks = trials.div_ceil(CHUNK);
    let partial = map_range(exec, chunks, |c| {
        let mut counts = vec![0u64; size];
        for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
            if let Some(end) = run(t) {
                counts[end] += 1;
            }
        }
        counts
    });
    let mut counts = vec![0u64; size];
    for part in partial {
        for (a, b) in counts.iter_mut().zip(part) {
            *a += b;
        }
    }
    counts
}

fn start_index(index: &TriIndex, (i, j): (usize, usize)) -> Result<usize> {
    index.try_index(i, j).filter(|&s| s != 0).ok_or_else(|| {
        Error::Validation(format!(
            "initial state ({i},{j}) must be a non-absorbed state of the triangle"
        ))
    })
}

/// Run `trials` paths for `horizon` steps and tabulate the surviving end states.
pub fn sample_conditional<S: Stepper>(
    stepper: &S,
    initial: (usize, usize),
    horizon: usize,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<SimReport> {
    let start = start_index(stepper.index(), initial)?;
    let counts = merge_counts(exec, stepper.index().size(), trials, |t| {
        let mut rng = SplitMix::stream(seed, t as u64);
        let mut x = start;
        for _ in 0..horizon {
            x = stepper.step(x, &mut rng);
            if x == 0 {
                return None;
            }
        }
        Some(x)
    });
    let survivors: u64 = counts.iter().sum();
    if survivors == 0 {
        return Err(Error::NoSurvivors { horizon });
    }
    let distribution = counts.iter().map(|&c| c as f64 / survivors as f64).collect();
    Ok(SimReport {
        initial,
        horizon,
        trials,
        seed,
        survivors,
        counts,
        distribution,
    })
}

/// Counts of `samples` single transitions out of `initial`, absorption included.
pub fn one_step_counts<S: Stepper>(
    stepper: &S,
    initial: (usize, usize),
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<u64>> {
    let start = start_index(stepper.index(), initial)?;
    Ok(merge_counts(exec, stepper.index().size(), samples, |t| {
        let mut rng = SplitMix::stream(seed, t as u64);
        Some(stepper.step(start, &mut rng))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::random_birth_death;
    use crate::lift::lift_full;

    #[test]
    fn cumulative_covers_rounding() {
        let c = cumulative(&[0.1, 0.2, 0.7 - 1e-17, 0.0]);
        assert_eq!(c[2], f64::INFINITY);
        let mut rng = SplitMix::new(3);
        for _ in 0..1000 {
            assert!(draw(&c, &mut rng) < 3);
        }
    }

    #[test]
    fn deterministic_across_modes() {
        let k = random_birth_death(2, 5);
        let s = NeutralSampler::new(&k);
        let a = sample_conditional(&s, (2, 1), 20, 10_000, 9, Execution::Sequential).unwrap();
        let b = sample_conditional(&s, (2, 1), 20, 10_000, 9, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn neutral_matches_lifted_row() {
        let k = random_birth_death(5, 4);
        let chain = lift_full(&k).unwrap();
        let s = NeutralSampler::new(&k);
        let counts = one_step_counts(&s, (2, 1), 200_000, 1, Execution::default()).unwrap();
        let row = chain.pi.row(chain.index.index(2, 1));
        let tv: f64 = counts
            .iter()
            .zip(row)
            .map(|(&c, p)| (c as f64 / 200_000.0 - p).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 5e-3, "tv {tv}");
    }

    #[test]
    fn absorbed_start_rejected() {
        let k = random_birth_death(5, 4);
        let s = NeutralSampler::new(&k);
        assert!(matches!(
            sample_conditional(&s, (0, 0), 3, 10, 1, Execution::Sequential),
            Err(Error::Validation(_))
        ));
    }
}
