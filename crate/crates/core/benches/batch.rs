use cerebellar_pam::batch::{run_batch_sequential, seed_sweep};
use cerebellar_pam::control::ControlMode;
use cerebellar_pam::harness::ExperimentConfig;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn configs(n: u64) -> Vec<ExperimentConfig> {
    let mut base = ExperimentConfig {
        duration: 1.0,
        training_duration: 0.5,
        snapshot_interval: 0.0,
        ..ExperimentConfig::default()
    };
    base.control.mode = ControlMode::FfPlusFb;
    seed_sweep(&base, 0..n)
}

fn batch(c: &mut Criterion) {
    let mut group = c.benchmark_group("batch_1s_runs");
    group.sample_size(10);
    for n in [1u64, 4, 8] {
        let cfgs = configs(n);
        group.bench_with_input(BenchmarkId::new("sequential", n), &cfgs, |b, cfgs| {
            b.iter(|| run_batch_sequential(cfgs))
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("parallel", n), &cfgs, |b, cfgs| {
            b.iter(|| cerebellar_pam::batch::run_batch_parallel(cfgs))
        });
    }
    group.finish();
}

criterion_group!(benches, batch);
criterion_main!(benches);
