use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use squeezelab::fock::{HilbertLayout, LinearOperator};
use squeezelab::metrology::{qfi_matrix_numeric, variance_sweep, log_grid};
use squeezelab::reservoir::trajectory_rng;
use squeezelab::sideband::{fit_populations, linear_grid, synthesize_curve, FitConfig, Model, ModelSpec};
use squeezelab::squeeze::{bogoliubov_kron, tmss_state, SqueezeSpec};
use squeezelab_bench::{k1_populations, two_mode_engine, OMEGA};

fn states(c: &mut Criterion) {
    let layout = HilbertLayout::new(2, 24, 0).unwrap();
    let spec = SqueezeSpec::two_mode(0.79);
    c.bench_function("tmss_state N=24", |b| b.iter(|| tmss_state(black_box(&layout), &spec).unwrap()));

    let psi = tmss_state(&layout, &spec).unwrap();
    c.bench_function("qfi_matrix_numeric N=24", |b| b.iter(|| qfi_matrix_numeric(black_box(&psi), 1.0).unwrap()));
}

fn kron_action(c: &mut Criterion) {
    let layout = HilbertLayout::new(3, 14, 0).unwrap();
    let k = bogoliubov_kron(&layout, &SqueezeSpec::three_mode(0.5), 0).unwrap();
    let v = vec![squeezelab::linalg::ONE; layout.dim()];
    c.bench_function("three-mode K apply N=14", |b| b.iter(|| k.apply(black_box(&v))));
}

fn reservoir(c: &mut Criterion) {
    let (engine, rho) = two_mode_engine(0.79, 16);
    let mut group = c.benchmark_group("reservoir");
    group.sample_size(10);
    group.bench_function("cycle N=16", |b| {
        b.iter(|| engine.cycle(black_box(&rho), &mut trajectory_rng(0, 0)).unwrap())
    });
    group.finish();
}

fn fitting(c: &mut Criterion) {
    let spec = ModelSpec::new(Model::Single, OMEGA).with_gamma(500.0);
    let curve = synthesize_curve(&spec, &k1_populations(), vec![linear_grid(5e-4, 200)], Some(200), 1).unwrap();
    let cfg = FitConfig::new(spec, 4).floating_gamma(true);
    c.bench_function("fit single-mode 200 points", |b| b.iter(|| fit_populations(black_box(&curve), &cfg).unwrap()));
}

fn estimation(c: &mut Criterion) {
    let grid = log_grid(1e-5, 1e-4, 8);
    let w = 2.0 * std::f64::consts::PI * 5e3;
    c.bench_function("variance_sweep 8 x 1e4", |b| {
        b.iter(|| variance_sweep(0.79, w, w, black_box(&grid), 10_000, 0).unwrap())
    });
}

criterion_group!(benches, states, kron_action, reservoir, fitting, estimation);
criterion_main!(benches);
