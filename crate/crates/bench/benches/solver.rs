use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use vortex_core::dynamics::FilamentRhs;
use vortex_core::integrator::{FilamentSystem, Stepper};
use vortex_core::stencil::{DerivativeOrder, DiffOperator};
use vortex_core::{init_perturbed_pair, FilamentState, Grid, IntegratorConfig, ModelParams, Vec3};

const SIZES: [usize; 3] = [500, 1500, 6000];

fn pair(n: usize) -> (FilamentState, ModelParams) {
    let params = ModelParams::reconnection(0.05, 5e-3).unwrap();
    let state = init_perturbed_pair(&Grid::periodic(n).unwrap(), &params).unwrap();
    (state, params)
}

fn stencil(c: &mut Criterion) {
    let mut group = c.benchmark_group("stencil_second_derivative");
    for n in SIZES {
        let (state, _) = pair(n);
        let op = DiffOperator::new(DerivativeOrder::Second, state.grid.spacing());
        group.bench_with_input(BenchmarkId::from_parameter(n), &state.tangents, |b, t| {
            b.iter(|| op.apply(black_box(t)).unwrap())
        });
    }
    group.finish();
}

fn rhs(c: &mut Criterion) {
    let mut group = c.benchmark_group("filament_rhs");
    for n in SIZES {
        let (state, params) = pair(n);
        let mut rhs = FilamentRhs::new(&state, &params);
        let (mut dx, mut dt) = (vec![Vec3::zeros(); n], vec![Vec3::zeros(); n]);
        group.bench_function(BenchmarkId::from_parameter(n), |b| {
            b.iter(|| rhs.eval(black_box(&state.positions), black_box(&state.tangents), &mut dx, &mut dt).unwrap())
        });
    }
    group.finish();
}

fn rkf_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("rkf_attempt");
    for n in SIZES {
        let (state, params) = pair(n);
        let config = IntegratorConfig::with_tol(1e-8);
        let mut sys = FilamentSystem::new(&state, &params, &config);
        let y = FilamentSystem::pack(&state);
        let mut stepper = Stepper::new(config, y.len()).unwrap();
        group.bench_function(BenchmarkId::from_parameter(n), |b| {
            b.iter(|| {
                stepper.invalidate();
                stepper.attempt(&mut sys, 0.0, black_box(&y), 1e-7).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, stencil, rhs, rkf_step);
criterion_main!(benches);
