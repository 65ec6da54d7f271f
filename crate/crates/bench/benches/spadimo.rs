use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use outlyingness::numerics::sym_eigen;
use outlyingness::robust::{detect_weights, qn_scale};
use outlyingness::simlab::{a09_correlation, gen_a09_dataset};
use outlyingness::spadimo::{default_grid, spadimo_explain};
use outlyingness::Detector;
use outlyingness_bench::contaminated_a09;

fn explain(c: &mut Criterion) {
    let mut group = c.benchmark_group("explain");
    group.sample_size(10);
    for (n, p) in [(500, 50), (50, 500), (50, 5000)] {
        let (z, case) = contaminated_a09(n, p, 0.05, 5.0, 1).unwrap();
        let cfg = default_grid(n, p);
        let w = detect_weights(&z, cfg.detect_alpha, &Detector::ConcentrationSteps).unwrap();
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{n}x{p}")),
            &(z, w),
            |b, (z, w)| b.iter(|| spadimo_explain(black_box(z), w, case, &cfg).unwrap()),
        );
    }
    group.finish();
}

fn detection(c: &mut Criterion) {
    let mut group = c.benchmark_group("detect_weights");
    group.sample_size(10);
    for (n, p) in [(500, 50), (50, 5000)] {
        let (z, _) = contaminated_a09(n, p, 0.05, 5.0, 2).unwrap();
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{n}x{p}")),
            &z,
            |b, z| {
                b.iter(|| {
                    detect_weights(black_box(z), 0.975, &Detector::ConcentrationSteps).unwrap()
                })
            },
        );
    }
    group.finish();
}

fn kernels(c: &mut Criterion) {
    let column = gen_a09_dataset(1000, 1, 3).unwrap().column(0);
    c.bench_function("qn_scale/1000", |b| {
        b.iter(|| qn_scale(black_box(&column)).unwrap())
    });

    let s = a09_correlation(100).unwrap();
    c.bench_function("sym_eigen/100", |b| {
        b.iter(|| sym_eigen(black_box(&s), 1e-12).unwrap())
    });
}

criterion_group!(benches, explain, detection, kernels);
criterion_main!(benches);
