//! Rayon-backed and sequential execution on the production grid sizes.
//! Build with `--no-default-features` to see the fallback path for both.

use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use prandtl_core::cache::corrector_for;
use prandtl_core::corrector::{CorrectorParams, CutoffTables, OutflowProfile};
use prandtl_core::diagnostics::{record, RadiusTracker, RecordInputs};
use prandtl_core::lp::DyadicFilterBank;
use prandtl_core::prandtl::{preset_initial_data, AnalyticState, PrandtlStepper, StepperOptions};
use prandtl_core::{Exec, Grid, GridSpec};

fn grid(exec: Exec) -> Arc<Grid> {
    Grid::new(GridSpec::uniform(64, 2.0 * std::f64::consts::PI, 300, 24.0), exec).unwrap()
}

fn params() -> CorrectorParams {
    CorrectorParams {
        f: OutflowProfile::default(),
        epsilon: 1e-3,
        t_final: 1.0,
        dt: 2e-3,
        stride: 10,
    }
}

fn step(c: &mut Criterion) {
    let mut group = c.benchmark_group("prandtl_step_64x300");
    for exec in [Exec::Sequential, Exec::Parallel] {
        let g = grid(exec);
        let (corr, _) = corrector_for(&g, &params(), None).unwrap();
        let opts = StepperOptions {
            transport: true,
            cfl_limit: 0.5,
        };
        group.bench_function(BenchmarkId::from_parameter(format!("{exec:?}")), |b| {
            let mut stepper =
                PrandtlStepper::new(&g, 2e-3, OutflowProfile::default(), 1e-3, Some(corr.clone()), opts).unwrap();
            let mut state = AnalyticState::new(preset_initial_data(&g, 1e-3, 1), 1e-3, 0.2, 4.0);
            b.iter(|| {
                // stay inside the stored corrector horizon
                if state.t > 0.9 {
                    state = AnalyticState::new(preset_initial_data(&g, 1e-3, 1), 1e-3, 0.2, 4.0);
                    stepper =
                        PrandtlStepper::new(&g, 2e-3, OutflowProfile::default(), 1e-3, Some(corr.clone()), opts)
                            .unwrap();
                }
                black_box(stepper.step(&mut state).unwrap());
            })
        });
    }
    group.finish();
}

fn diagnostics(c: &mut Criterion) {
    let mut group = c.benchmark_group("diagnostics_record_64x300");
    for exec in [Exec::Sequential, Exec::Parallel] {
        let g = grid(exec);
        let (corr, _) = corrector_for(&g, &params(), None).unwrap();
        let bank = DyadicFilterBank::for_grid(&g).unwrap();
        let tables = CutoffTables::new(&g);
        let f = OutflowProfile::default();
        let inputs = RecordInputs {
            bank: &bank,
            tables: &tables,
            corrector: &corr,
            f: &f,
            epsilon: 1e-3,
            delta: 0.2,
            tail_tol: 1e-8,
        };
        let state = AnalyticState::new(preset_initial_data(&g, 1e-3, 1), 1e-3, 0.2, 4.0);
        group.bench_function(BenchmarkId::from_parameter(format!("{exec:?}")), |b| {
            b.iter(|| {
                let mut tracker = RadiusTracker::new(0.2, 4.0);
                black_box(record(&inputs, &state, &mut tracker).unwrap())
            })
        });
    }
    group.finish();
}

criterion_group!(benches, step, diagnostics);
criterion_main!(benches);
