use neutral_spectra::dirichlet::ordering_report;
use neutral_spectra::io::{matrix_csv, parse_matrix_csv};
use neutral_spectra::kernel::{random_birth_death, random_kernel, random_reversible, reversible_measure};
use neutral_spectra::lift::{interior_states, lift_block, lift_full, mu_d, nu_measure};
use neutral_spectra::linalg::{norm_inf, Matrix};
use neutral_spectra::moran::transition_matrix;
use neutral_spectra::rng::SplitMix;
use neutral_spectra::sim::{sample_conditional, NeutralSampler};
use neutral_spectra::spectral::{check_symmetrizable, perron_pair, sym_eigen};
use neutral_spectra::{eval_p, Execution, TriIndex};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn tri_index_round_trip(n in 1usize..40, a in 0usize..1000, b in 0usize..1000) {
        let index = TriIndex::new(n);
        prop_assert_eq!(index.size(), (n + 1) * (n + 2) / 2);
        let i = a % (n + 1);
        let j = b % (n + 1 - i);
        let s = index.index(i, j);
        prop_assert_eq!(index.state(s), (i, j));
        prop_assert!(index.try_index(i, n + 1 - i).is_none());
    }

    #[test]
    fn lifted_rows_are_stochastic(seed in any::<u64>(), n in 1usize..=12, absorb in 0.01f64..0.9) {
        let chain = lift_full(&random_kernel(seed, n, absorb)).unwrap();
        for (r, s) in chain.pi.row_sums().iter().enumerate() {
            prop_assert!((s - 1.0).abs() < 1e-12, "row {r} sums to {s}");
        }
        prop_assert!(chain.pi.data().iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn axes_are_absorbing(seed in any::<u64>(), n in 2usize..=10) {
        let spec = random_kernel(seed, n, 0.2);
        let chain = lift_full(&spec).unwrap();
        for i in 1..=n {
            for (k, l) in chain.index.states().iter().copied() {
                let p = chain.p((i, 0), (k, l));
                if l > 0 {
                    prop_assert_eq!(p, 0.0);
                } else {
                    prop_assert_eq!(p, spec.p(i, k));
                }
            }
        }
    }

    #[test]
    fn p_d_is_stable(seed in any::<u64>(), n in 2usize..=9, d_pick in 0usize..100) {
        let spec = random_kernel(seed, n, 0.3);
        let chain = lift_full(&spec).unwrap();
        let d = d_pick % (n + 1);
        let block = lift_block(&spec, d).unwrap();
        let mut rng = SplitMix::stream(seed, 1);
        let u: Vec<f64> = block.populations().map(|_| rng.next_signed()).collect();
        let pu = block.matrix.mul_vec(&u);
        let v: Vec<f64> = chain.index.states().iter().map(|&(i, j)| {
            if i + j < d { 0.0 } else { eval_p(d as u32, i as i64, j as i64) * u[i + j - d] }
        }).collect();
        let lhs = chain.pi.mul_vec(&v);
        let scale = norm_inf(&v).max(1.0);
        for (s, &(i, j)) in chain.index.states().iter().enumerate() {
            let rhs = if i + j < d { 0.0 } else { eval_p(d as u32, i as i64, j as i64) * pu[i + j - d] };
            prop_assert!((lhs[s] - rhs).abs() <= 1e-9 * scale, "d={d} at ({i},{j}): {} vs {rhs}", lhs[s]);
        }
    }

    #[test]
    fn lift_preserves_reversibility(seed in any::<u64>(), n in 2usize..=9) {
        let spec = random_reversible(seed, n, 0.2);
        let mu = reversible_measure(&spec).unwrap();
        let chain = lift_full(&spec).unwrap();
        let states = interior_states(n);
        let idx: Vec<usize> = states.iter().map(|&(i, j)| chain.index.index(i, j)).collect();
        prop_assert!(check_symmetrizable(&chain.pi.submatrix(&idx), &nu_measure(&mu, n)).is_ok());
        for d in 1..=n {
            let block = lift_block(&spec, d).unwrap();
            prop_assert!(check_symmetrizable(&block.matrix, &mu_d(&mu, d)).is_ok(), "block {d}");
        }
    }

    #[test]
    fn sym_eigen_residuals(seed in any::<u64>(), n in 1usize..=12) {
        let spec = random_reversible(seed, n, 0.1);
        let mu = reversible_measure(&spec).unwrap();
        let m = spec.interior();
        let eig = sym_eigen(&m, mu.weights()).unwrap();
        for (c, &theta) in eig.values.iter().enumerate() {
            let v = eig.vectors.column(c);
            let mv = m.mul_vec(&v);
            let r: f64 = mv.iter().zip(&v).map(|(a, b)| (a - theta * b).abs()).fold(0.0, f64::max);
            prop_assert!(r < 1e-10 * norm_inf(&v).max(1.0));
        }
    }

    #[test]
    fn perron_pair_of_positive_matrices(seed in any::<u64>(), n in 1usize..=15) {
        let mut rng = SplitMix::new(seed);
        let data: Vec<f64> = (0..n * n).map(|_| 0.01 + rng.next_f64()).collect();
        let m = Matrix::from_vec(n, n, data);
        let pp = perron_pair(&m, 1e-12).unwrap();
        let mu = m.mul_vec(&pp.u);
        let vm = m.vec_mul(&pp.v);
        for k in 0..n {
            prop_assert!(pp.u[k] > 0.0 && pp.v[k] > 0.0);
            prop_assert!((mu[k] - pp.theta * pp.u[k]).abs() < 1e-9 * pp.theta * norm_inf(&pp.u));
            prop_assert!((vm[k] - pp.theta * pp.v[k]).abs() < 1e-9 * pp.theta * norm_inf(&pp.v));
        }
    }

    #[test]
    fn matrix_csv_round_trips_bits(seed in any::<u64>(), n in 1usize..=8) {
        let chain = lift_full(&random_kernel(seed, n, 0.25)).unwrap();
        let (index, m) = parse_matrix_csv(&matrix_csv(&chain.index, &chain.pi)).unwrap();
        prop_assert_eq!(index, chain.index);
        let same = m.data().iter().zip(chain.pi.data()).all(|(a, b)| a.to_bits() == b.to_bits());
        prop_assert!(same);
    }
}

proptest! {
    #![proptest_config(config(16))]

    #[test]
    fn ordering_holds_for_random_kernels(seed in any::<u64>(), n in 2usize..=7) {
        let report = ordering_report(&random_kernel(seed, n, 0.2)).unwrap();
        prop_assert!(report.all_hold(), "{:?}", report.violations());
    }

    #[test]
    fn moran_rows_sum_to_denominator(n in 2usize..=12) {
        let spec = transition_matrix(n).unwrap();
        for row in &spec.rows {
            prop_assert_eq!(row.iter().map(|&(_, v)| v).sum::<i64>(), spec.denominator());
        }
    }

    #[test]
    fn simulation_independent_of_execution(seed in any::<u64>(), n in 2usize..=6) {
        let sampler = NeutralSampler::new(&random_birth_death(seed, n));
        let run = |exec| sample_conditional(&sampler, (1, 1), 5, 9000, seed, exec);
        match (run(Execution::Sequential), run(Execution::Parallel)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.counts, b.counts),
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }
}
