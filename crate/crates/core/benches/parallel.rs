//! One thread against the full rayon pool on the data-parallel hot paths.
//! Without the `parallel` feature both variants run sequentially.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use serde_json::json;

use isoperim::curvature::curvature;
use isoperim::distances::hausdorff_to_model;
use isoperim::exec;
use isoperim::experiments::{run_sweep, Measurement, SweepConfig};
use isoperim::generators::{nearly_spherical, GraphFunction};
use isoperim::measures::{fit_sphere, fraenkel_asymmetry, FitMethod};
use isoperim::sampling::SamplerConfig;

fn modes() -> [(&'static str, Option<usize>); 2] {
    [("threads=1", Some(1)), ("pool", None)]
}

fn kernels(c: &mut Criterion) {
    let mesh = nearly_spherical(&GraphFunction::harmonic(3, 2, 0.05), 5).unwrap();
    let sampler = SamplerConfig::default();
    let fit = fit_sphere(&mesh, FitMethod::BoundaryLeastSquares, &sampler).unwrap();

    let mut g = c.benchmark_group("kernels");
    g.sample_size(10);
    for (name, threads) in modes() {
        g.bench_with_input(BenchmarkId::new("hausdorff_to_model", name), &threads, |b, t| {
            b.iter(|| exec::with_threads(*t, || hausdorff_to_model(black_box(&mesh), &fit, &[]).unwrap()))
        });
        g.bench_with_input(BenchmarkId::new("curvature", name), &threads, |b, t| {
            b.iter(|| exec::with_threads(*t, || curvature(black_box(&mesh), &[2.0, 4.0]).unwrap()))
        });
        g.bench_with_input(BenchmarkId::new("asymmetry", name), &threads, |b, t| {
            b.iter(|| exec::with_threads(*t, || fraenkel_asymmetry(black_box(&mesh), &sampler).unwrap()))
        });
    }
    g.finish();
}

fn sweep(c: &mut Criterion) {
    let mut cfg = SweepConfig::new("random_star_mesh", Some("seed"), (1..=8).map(|s| json!(s)).collect());
    cfg.base = json!({"amplitude": 0.05}).as_object().unwrap().clone();
    cfg.level = 3;
    cfg.measurements = vec![Measurement::Deficit, Measurement::Fit, Measurement::Lipschitz, Measurement::Curvature];

    let mut g = c.benchmark_group("sweep");
    g.sample_size(10);
    for (name, threads) in modes() {
        g.bench_with_input(BenchmarkId::new("random_star_mesh", name), &threads, |b, t| {
            b.iter(|| exec::with_threads(*t, || run_sweep(black_box(&cfg)).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, kernels, sweep);
criterion_main!(benches);
