use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use neutral_spectra::dirichlet::ordering_report_with;
use neutral_spectra::kernel::{random_birth_death, random_kernel};
use neutral_spectra::lift::lift_full_with;
use neutral_spectra::qsd::perturb_batch;
use neutral_spectra::sim::{sample_conditional, NeutralSampler};
use neutral_spectra::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bench(c: &mut Criterion) {
    let kernel = random_kernel(1, 40, 0.2);
    let mut group = c.benchmark_group("lift_full N=40");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| lift_full_with(&kernel, exec).unwrap())
        });
    }
    group.finish();

    let kernel = random_kernel(2, 10, 0.2);
    let mut group = c.benchmark_group("ordering_report N=10");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| ordering_report_with(&kernel, exec).unwrap())
        });
    }
    group.finish();

    let bd = random_birth_death(3, 8);
    let sampler = NeutralSampler::new(&bd);
    let mut group = c.benchmark_group("sample_conditional 1e5 trials");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| sample_conditional(&sampler, (2, 2), 50, 100_000, 9, exec).unwrap())
        });
    }
    group.finish();

    let seeds: Vec<u64> = (0..32).collect();
    let bd = random_birth_death(4, 6);
    let mut group = c.benchmark_group("perturb_batch 32 seeds");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| perturb_batch(&bd, 1e-3, &seeds, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
