//! Time integration of the reduced boundary-layer system
//!
//! `u_t + (u + U) u_x + v ∂_y(u + U) - u_yy = 0`, `v = -∫_0^y u_x`,
//!
//! with `U = u^s + eps f(t) chi(y)` the corrector shear, `u = 0` at the wall
//! and at `Ymax`. Diffusion is Crank-Nicolson; transport is Adams-Bashforth
//! with a backward/forward Euler first step.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cache::{corrector_for, CorrectorCache};
use crate::config::ScenarioConfig;
use crate::corrector::{solve_gs, CorrectorTrajectory, CutoffTables, OutflowProfile};
use crate::diagnostics::{self, DiagnosticsRecord, RadiusTracker, RecordInputs};
use crate::diffusion::{ImplicitDiffusion, LowerBoundary};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::field::{Field2D, VProfile};
use crate::grid::Grid;
use crate::lp::DyadicFilterBank;

/// Shape of the preset initial data: `y (1 - y^2/4) e^{-y^2/4}`.
pub fn preset_profile(y: f64) -> f64 {
    y * (1.0 - 0.25 * y * y) * (-0.25 * y * y).exp()
}

/// `eta sin(k0 x) y (1 - y^2/4) e^{-y^2/4}`.
pub fn preset_initial_data(grid: &Arc<Grid>, eta: f64, k0: usize) -> Field2D {
    let shape = VProfile::from_fn(grid, |y| eta * preset_profile(y));
    Field2D::single_mode(grid, k0, 0.0, 1.0, &shape)
}

/// Simulation state.
#[derive(Debug, Clone)]
pub struct AnalyticState {
    pub t: f64,
    pub steps: usize,
    pub u: Field2D,
    pub epsilon: f64,
    pub delta: f64,
    pub lambda: f64,
    pub theta: f64,
    /// Accumulated L2 size of the x-mean content removed by projection.
    pub mean_removed: f64,
}

impl AnalyticState {
    pub fn new(u: Field2D, epsilon: f64, delta: f64, lambda: f64) -> Self {
        AnalyticState {
            t: 0.0,
            steps: 0,
            u,
            epsilon,
            delta,
            lambda,
            theta: 0.0,
            mean_removed: 0.0,
        }
    }

    pub fn radius(&self) -> f64 {
        self.delta - self.lambda * self.theta
    }
}

/// `φ = -∫_y^∞ u`, without any constraint check.
pub fn phi_from_tail(u: &Field2D) -> Field2D {
    u.int_y_to_inf().scaled(-1.0)
}

/// `φ = -∫_y^∞ u`, asserting that `φ(·, 0)` stays within the constraint
/// tolerance relative to `‖u‖`. Drift beyond ten times the tolerance is a
/// consistency error.
pub fn recover_phi(u: &Field2D, tol: f64) -> Result<Field2D> {
    let phi = phi_from_tail(u);
    let scale = u.l2_norm();
    let drift = phi.wall_residual();
    if scale > 0.0 && drift > 10.0 * tol * scale {
        return Err(Error::Consistency(format!(
            "φ(x, 0) = {drift:.3e} exceeds ten times the tolerance {tol:e} relative to ‖u‖ = {scale:.3e}"
        )));
    }
    Ok(phi)
}

/// `v = -∫_0^y ∂_x u`.
pub fn recover_v(u: &Field2D) -> Field2D {
    u.ddx().int_y_from_wall().scaled(-1.0)
}

/// `G = u + y φ / (2<t>)` and `g = ∂_y G`, the latter assembled with the
/// product rule and `∂_y φ = u`.
pub fn good_unknown(u: &Field2D, phi: &Field2D, t: f64) -> Result<(Field2D, Field2D)> {
    u.grid().check_same(phi.grid())?;
    let grid = u.grid();
    let s = 1.0 + t;
    let y = VProfile::from_fn(grid, |y| y / (2.0 * s));
    let g_big = u.add(&phi.mul_profile(&y)?)?;
    let g = u
        .ddy()
        .add(&phi.scaled(1.0 / (2.0 * s)))?
        .add(&u.mul_profile(&y)?)?;
    Ok((g_big, g))
}

/// Outcome of [`validate_initial_data`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialDataReport {
    pub wall_residual: f64,
    /// `max_j |∫ u_j dy| / ‖u‖`
    pub integral_residual: f64,
    pub mean_residual: f64,
    /// `‖e^{y^2/8} e^{δ|D_x|} u_0‖_{B^{1/2,0}}`
    pub u_norm: f64,
    /// `‖e^{y^2/8} e^{δ|D_x|} φ_0‖_{B^{1/2,0}}`
    pub phi_norm: f64,
    /// `‖e^{y^2/8} e^{δ|D_x|} G_0‖_{B^{1/2,0}}`
    pub g_norm: f64,
}

pub fn validate_initial_data(u0: &Field2D, delta: f64, tol: f64) -> Result<InitialDataReport> {
    let bank = DyadicFilterBank::for_grid(u0.grid())?;
    let scale = u0.l2_norm();
    let rel = |v: f64| if scale > 0.0 { v / scale } else { v };
    let wall = u0.wall_residual();
    if wall != 0.0 {
        return Err(Error::InitialData {
            constraint: "u0(x, 0) = 0".into(),
            measured: wall,
            tolerance: 0.0,
        });
    }
    let integral = rel(u0.y_integrals().iter().map(|c| c.norm()).fold(0.0, f64::max));
    if integral > tol {
        return Err(Error::InitialData {
            constraint: "∫ u0 dy = 0".into(),
            measured: integral,
            tolerance: tol,
        });
    }
    let mean = rel(u0.mean_mode_max());
    if mean > tol {
        return Err(Error::InitialData {
            constraint: "zero x-mean".into(),
            measured: mean,
            tolerance: tol,
        });
    }
    let phi = phi_from_tail(u0);
    let (g0, _) = good_unknown(u0, &phi, 0.0)?;
    let norm = |a: &Field2D| diagnostics::weighted_analytic_norm(&bank, a, 0.0, 1.0, delta).map(|r| r.0);
    let report = InitialDataReport {
        wall_residual: wall,
        integral_residual: integral,
        mean_residual: mean,
        u_norm: norm(u0)?,
        phi_norm: norm(&phi)?,
        g_norm: norm(&g0)?,
    };
    if !(report.u_norm.is_finite() && report.phi_norm.is_finite()) {
        return Err(Error::InitialData {
            constraint: "finite weighted analytic norm".into(),
            measured: f64::INFINITY,
            tolerance: 0.0,
        });
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy)]
pub struct StepperOptions {
    /// Include the transport terms; without them a step is a pure heat solve.
    pub transport: bool,
    pub cfl_limit: f64,
}

impl Default for StepperOptions {
    fn default() -> Self {
        StepperOptions {
            transport: true,
            cfl_limit: 0.5,
        }
    }
}

/// Shear `U = u^s + eps f chi` and its y-derivative at one time.
struct Shear {
    u: Vec<f64>,
    du: Vec<f64>,
}

/// One-step integrator for `u`. Owns the factorizations and the
/// Adams-Bashforth history.
pub struct PrandtlStepper {
    grid: Arc<Grid>,
    dt: f64,
    cn: ImplicitDiffusion,
    startup: ImplicitDiffusion,
    corrector: Option<Arc<CorrectorTrajectory>>,
    tables: CutoffTables,
    f: OutflowProfile,
    epsilon: f64,
    options: StepperOptions,
    previous: Option<Field2D>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub cfl: f64,
    pub mean_removed: f64,
}

impl PrandtlStepper {
    pub fn new(
        grid: &Arc<Grid>,
        dt: f64,
        f: OutflowProfile,
        epsilon: f64,
        corrector: Option<Arc<CorrectorTrajectory>>,
        options: StepperOptions,
    ) -> Result<Self> {
        Ok(PrandtlStepper {
            grid: grid.clone(),
            dt,
            cn: ImplicitDiffusion::new(grid, dt, 0.0, 0.5, LowerBoundary::Dirichlet)?,
            startup: ImplicitDiffusion::new(grid, dt, 0.0, 1.0, LowerBoundary::Dirichlet)?,
            corrector,
            tables: CutoffTables::new(grid),
            f,
            epsilon,
            options,
            previous: None,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn shear(&self, t: f64) -> Shear {
        let n = self.grid.ny();
        let mut u = vec![0.0; n];
        let mut du = vec![0.0; n];
        if let Some(c) = &self.corrector {
            c.shear_at(t, &mut u, &mut du);
        }
        let ef = self.epsilon * self.f.value(t);
        for i in 0..n {
            u[i] += ef * self.tables.chi.values()[i];
            du[i] += ef * self.tables.chi_d1.values()[i];
        }
        Shear { u, du }
    }

    /// `-( (u + U) u_x + v (U' + u_y) )` with the quadratic part dealiased,
    /// and the CFL number of `u + U`.
    pub fn transport(&self, u: &Field2D, t: f64) -> Result<(Field2D, f64)> {
        let grid = &self.grid;
        let shear = self.shear(t);
        let ux = u.ddx();
        let uy = u.ddy();
        let v = ux.int_y_from_wall().scaled(-1.0);

        let (nx, ny) = (grid.nx(), grid.ny());
        let up = u.to_physical();
        let uxp = ux.to_physical();
        let uyp = uy.to_physical();
        let vp = v.to_physical();
        let mut prod = vec![0.0; nx * ny];
        let mut speed: f64 = 0.0;
        for i in 0..ny {
            for n in 0..nx {
                let k = i * nx + n;
                prod[k] = up[k] * uxp[k] + vp[k] * uyp[k];
                speed = speed.max((up[k] + shear.u[i]).abs());
            }
        }
        let mut nonlinear = Field2D::from_physical(grid, &prod)?;
        nonlinear.truncate_two_thirds();

        let (su, sdu) = (&shear.u, &shear.du);
        let (uxc, vc) = (ux.coefficients(), v.coefficients());
        let out = nonlinear.map_modes(|j, nl, out| {
            for i in 0..ny {
                let lin = uxc[j * ny + i] * su[i] + vc[j * ny + i] * sdu[i];
                out[i] = -(nl[i] + lin);
            }
        });
        let cfl = self.dt * speed / grid.dx();
        Ok((out, cfl))
    }

    /// Advance `state` by one step.
    pub fn step(&mut self, state: &mut AnalyticState) -> Result<StepInfo> {
        let t = state.t;
        let (forcing, cfl) = if self.options.transport {
            self.transport(&state.u, t)?
        } else {
            (Field2D::zeros(&self.grid), 0.0)
        };
        if !(cfl <= self.options.cfl_limit) {
            if cfl.is_nan() {
                return Err(Error::NumericFault {
                    t,
                    what: "velocity is not finite".into(),
                });
            }
            return Err(Error::Cfl {
                t,
                cfl,
                limit: self.options.cfl_limit,
            });
        }
        let (op, explicit) = match &self.previous {
            None => (&self.startup, forcing.clone()),
            Some(prev) => (&self.cn, forcing.scaled(1.5).axpy(-0.5, prev)?),
        };
        let ny = self.grid.ny();
        let fc = explicit.coefficients();
        let coef = state.u.coefficients_mut();
        self.grid.exec().for_each_chunk_mut(coef, ny, |j, col| {
            let mut scratch = vec![Complex64::new(0.0, 0.0); ny];
            op.advance(col, &fc[j * ny..(j + 1) * ny], &mut scratch);
        });
        let removed = {
            let m = state.u.mode(0);
            (self.grid.length() * self.grid.integrate_sq(m)).sqrt()
        };
        state.u.mode_mut(0).fill(Complex64::new(0.0, 0.0));
        state.u.zero_nyquist();
        self.previous = Some(forcing);
        // step count times dt, so record times do not drift
        state.steps += 1;
        state.t = state.steps as f64 * self.dt;
        state.mean_removed += removed;
        if !state.u.is_finite() {
            return Err(Error::NumericFault {
                t: state.t,
                what: "solution is not finite".into(),
            });
        }
        Ok(StepInfo {
            cfl,
            mean_removed: removed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    /// `θ` reached `δ/λ`: the analytic strip closed.
    Breach { t: f64, theta: f64 },
    Cfl { t: f64, cfl: f64, limit: f64 },
    NumericFault { t: f64, what: String },
    /// The weighted tail at `Ymax` exceeded its tolerance with aborting enabled.
    Truncation { t: f64, tail: f64 },
}

impl RunStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }

    /// 0 ok, 2 breach, 3 CFL, 4 numeric fault (a truncation abort counts as one).
    pub fn exit_code(&self) -> i32 {
        match self {
            RunStatus::Completed => 0,
            RunStatus::Breach { .. } => 2,
            RunStatus::Cfl { .. } => 3,
            RunStatus::NumericFault { .. } | RunStatus::Truncation { .. } => 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub records: Vec<DiagnosticsRecord>,
    /// State at the end of the run, or the last finite state after a fault.
    pub final_state: AnalyticState,
    pub initial: InitialDataReport,
    pub warnings: Vec<String>,
    pub tracker: RadiusTracker,
    /// States captured at the snapshot cadence (empty when it is 0).
    pub snapshots: Vec<AnalyticState>,
}

/// Hooks for long runs; the default does nothing.
pub trait RunObserver {
    fn on_record(&mut self, _record: &DiagnosticsRecord) {}
}

impl RunObserver for () {}

pub fn build_grid(config: &ScenarioConfig) -> Result<Arc<Grid>> {
    let exec = if config.parallel {
        Exec::Parallel
    } else {
        Exec::Sequential
    };
    Grid::new(config.grid_spec(), exec)
}

/// Run a scenario, taking the corrector from the configured cache when present.
pub fn run_simulation(config: &ScenarioConfig) -> Result<RunOutcome> {
    let grid = build_grid(config)?;
    config.validate()?;
    let cache = (!config.cache_dir.is_empty()).then(|| CorrectorCache::new(&config.cache_dir));
    let (corrector, _) = corrector_for(&grid, &config.corrector_params()?, cache.as_ref())?;
    run_with_corrector(config, &grid, corrector, &mut ())
}

/// Run a scenario with a precomputed corrector trajectory.
pub fn run_with_corrector(
    config: &ScenarioConfig,
    grid: &Arc<Grid>,
    corrector: Arc<CorrectorTrajectory>,
    observer: &mut dyn RunObserver,
) -> Result<RunOutcome> {
    config.validate()?;
    let f = config.outflow()?;
    let u0 = preset_initial_data(grid, config.eta, config.k0);
    let initial = validate_initial_data(&u0, config.delta, config.constraint_tol)?;
    let mut warnings = config.warnings();
    let bank = DyadicFilterBank::for_grid(grid)?;
    let tables = CutoffTables::new(grid);
    let mut stepper = PrandtlStepper::new(
        grid,
        config.dt,
        f.clone(),
        config.epsilon,
        Some(corrector.clone()),
        StepperOptions {
            transport: true,
            cfl_limit: config.cfl_limit,
        },
    )?;
    let mut state = AnalyticState::new(u0, config.epsilon, config.delta, config.lambda);
    let mut tracker = RadiusTracker::new(config.delta, config.lambda);
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let inputs = RecordInputs {
        bank: &bank,
        tables: &tables,
        corrector: &corrector,
        f: &f,
        epsilon: config.epsilon,
        delta: config.delta,
        tail_tol: config.tail_tol,
    };
    let mut truncation_warned = false;

    let emit = |state: &AnalyticState, tracker: &mut RadiusTracker| -> Result<DiagnosticsRecord> {
        let rec = diagnostics::record(&inputs, state, tracker)?;
        Ok(rec)
    };

    let first = emit(&state, &mut tracker)?;
    observer.on_record(&first);
    records.push(first);

    let steps = config.steps();
    let mut status = RunStatus::Completed;
    let mut last_good = state.clone();
    for n in 0..steps {
        match stepper.step(&mut state) {
            Ok(_) => {}
            Err(Error::Cfl { t, cfl, limit }) => {
                status = RunStatus::Cfl { t, cfl, limit };
                break;
            }
            Err(Error::NumericFault { t, what }) => {
                status = RunStatus::NumericFault { t, what };
                state = last_good.clone();
                break;
            }
            Err(e) => return Err(e),
        }
        if config.snapshot_every > 0 && (n + 1) % config.snapshot_every == 0 {
            snapshots.push(state.clone());
        }
        if (n + 1) % config.output_every == 0 || n + 1 == steps {
            let rec = emit(&state, &mut tracker)?;
            state.theta = tracker.theta();
            observer.on_record(&rec);
            let breached = tracker.breached();
            let tail = rec.tail_u;
            let flagged = rec.truncation_flag;
            records.push(rec);
            if flagged && !truncation_warned {
                truncation_warned = true;
                warnings.push(format!(
                    "weighted tail at ymax reached {tail:.2e} of the weighted norm at t = {:.4}",
                    state.t
                ));
                if config.abort_on_truncation {
                    status = RunStatus::Truncation { t: state.t, tail };
                    break;
                }
            }
            if breached {
                status = RunStatus::Breach {
                    t: state.t,
                    theta: tracker.theta(),
                };
                break;
            }
            if !state.u.is_finite() {
                status = RunStatus::NumericFault {
                    t: state.t,
                    what: "diagnostics not finite".into(),
                };
                state = last_good.clone();
                break;
            }
            last_good = state.clone();
        }
    }
    state.theta = tracker.theta();
    Ok(RunOutcome {
        status,
        records,
        final_state: state,
        initial,
        warnings,
        tracker,
        snapshots,
    })
}

/// Disagreement between `u` and `∂_y φ` after evolving `φ` independently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiCrossCheck {
    pub t: f64,
    pub relative_disagreement: f64,
}

/// Evolve `φ` by its own equation
/// `φ_t + (u + U) φ_x + 2 ∫_y^∞ ∂_y(u + U) φ_x - φ_yy = 0`
/// with `∂_y φ(0) = 0`, alongside `u`, and compare `∂_y φ` with `u`.
pub fn phi_route_crosscheck(
    grid: &Arc<Grid>,
    u0: &Field2D,
    f: &OutflowProfile,
    epsilon: f64,
    dt: f64,
    t_end: f64,
) -> Result<PhiCrossCheck> {
    let corrector = Arc::new(solve_gs(
        grid,
        &crate::corrector::CorrectorParams {
            f: f.clone(),
            epsilon,
            t_final: t_end,
            dt,
            stride: 1,
        },
    )?);
    let mut stepper = PrandtlStepper::new(grid, dt, f.clone(), epsilon, Some(corrector.clone()), StepperOptions::default())?;
    let mut state = AnalyticState::new(u0.clone(), epsilon, 1.0, 1.0);
    let mut phi = phi_from_tail(u0);
    let cn = ImplicitDiffusion::new(grid, dt, 0.0, 0.5, LowerBoundary::Neumann)?;
    let startup = ImplicitDiffusion::new(grid, dt, 0.0, 1.0, LowerBoundary::Neumann)?;
    let tables = CutoffTables::new(grid);
    let ny = grid.ny();
    let mut previous: Option<Field2D> = None;
    let steps = (t_end / dt).round() as usize;
    for _ in 0..steps {
        let t = state.t;
        // shear at t
        let mut su = vec![0.0; ny];
        let mut sdu = vec![0.0; ny];
        corrector.shear_at(t, &mut su, &mut sdu);
        let ef = epsilon * f.value(t);
        for i in 0..ny {
            su[i] += ef * tables.chi.values()[i];
            sdu[i] += ef * tables.chi_d1.values()[i];
        }
        let u = phi.ddy();
        let phix = phi.ddx();
        let uy = u.ddy();
        let mut a = u.product(&phix, true)?;
        let mut b = uy.product(&phix, true)?;
        a.zero_nyquist();
        b.zero_nyquist();
        let pc = phix.coefficients();
        let lin_a = phix.map_modes(|j, _, out| {
            for i in 0..ny {
                out[i] = pc[j * ny + i] * su[i];
            }
        });
        let lin_b = phix.map_modes(|j, _, out| {
            for i in 0..ny {
                out[i] = pc[j * ny + i] * sdu[i];
            }
        });
        let tail = b.add(&lin_b)?.int_y_to_inf();
        let forcing = a.add(&lin_a)?.axpy(2.0, &tail)?.scaled(-1.0);
        let (op, explicit) = match &previous {
            None => (&startup, forcing.clone()),
            Some(p) => (&cn, forcing.scaled(1.5).axpy(-0.5, p)?),
        };
        let fc = explicit.coefficients().to_vec();
        grid.exec().for_each_chunk_mut(phi.coefficients_mut(), ny, |j, col| {
            let mut scratch = vec![Complex64::new(0.0, 0.0); ny];
            op.advance(col, &fc[j * ny..(j + 1) * ny], &mut scratch);
        });
        phi.mode_mut(0).fill(Complex64::new(0.0, 0.0));
        phi.zero_nyquist();
        previous = Some(forcing);
        stepper.step(&mut state)?;
    }
    let du = phi.ddy().sub(&state.u)?;
    let scale = state.u.l2_norm();
    Ok(PhiCrossCheck {
        t: state.t,
        relative_disagreement: if scale > 0.0 { du.l2_norm() / scale } else { du.l2_norm() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use std::f64::consts::PI;

    fn grid(nx: usize, ny: usize, ymax: f64) -> Arc<Grid> {
        Grid::new(GridSpec::uniform(nx, 2.0 * PI, ny, ymax), Exec::Parallel).unwrap()
    }

    #[test]
    fn preset_data_identities() {
        let g = grid(16, 481, 24.0);
        let eta = 1e-3;
        let u0 = preset_initial_data(&g, eta, 1);
        let report = validate_initial_data(&u0, 0.2, 1e-8).unwrap();
        assert!(report.integral_residual < 1e-9, "{}", report.integral_residual);
        let phi = recover_phi(&u0, 1e-8).unwrap();
        let exact_phi = Field2D::from_fn(&g, |x, y| eta * x.sin() * 0.5 * y * y * (-0.25 * y * y).exp());
        assert!(phi.sub(&exact_phi).unwrap().max_abs_physical() < 1e-8 * eta);
        let (g0, _) = good_unknown(&u0, &phi, 0.0).unwrap();
        let exact_g = Field2D::from_fn(&g, |x, y| eta * x.sin() * y * (-0.25 * y * y).exp());
        assert!(g0.sub(&exact_g).unwrap().max_abs_physical() < 1e-10);
    }

    #[test]
    fn rejects_wall_value() {
        let g = grid(16, 101, 10.0);
        let bad = Field2D::from_fn(&g, |x, y| x.sin() * (-y * y).exp());
        assert!(matches!(
            validate_initial_data(&bad, 0.2, 1e-8),
            Err(Error::InitialData { .. })
        ));
        let zero = validate_initial_data(&Field2D::zeros(&g), 0.2, 1e-8).unwrap();
        assert_eq!(zero.u_norm, 0.0);
    }

    #[test]
    fn v_and_phi_agree() {
        let g = grid(16, 481, 24.0);
        let u = preset_initial_data(&g, 1.0, 2);
        let v = recover_v(&u);
        let phi = phi_from_tail(&u);
        let diff = v.add(&phi.ddx()).unwrap();
        assert!(diff.l2_norm() < 1e-7, "{}", diff.l2_norm());
        let flat = Field2D::single_mode(&g, 0, 1.0, 0.0, &VProfile::from_fn(&g, preset_profile));
        assert!(recover_v(&flat).is_zero());
    }

    #[test]
    fn null_solution_stays_zero() {
        let g = grid(16, 121, 24.0);
        let traj = Arc::new(
            solve_gs(
                &g,
                &crate::corrector::CorrectorParams {
                    f: OutflowProfile::default(),
                    epsilon: 1e-3,
                    t_final: 0.5,
                    dt: 1e-2,
                    stride: 1,
                },
            )
            .unwrap(),
        );
        let mut st = PrandtlStepper::new(&g, 1e-2, OutflowProfile::default(), 1e-3, Some(traj), StepperOptions::default()).unwrap();
        let mut s = AnalyticState::new(Field2D::zeros(&g), 1e-3, 0.2, 4.0);
        for _ in 0..50 {
            st.step(&mut s).unwrap();
        }
        assert!(s.u.is_zero());
    }

    #[test]
    fn heat_only_step_matches_separable_solution() {
        let ymax = 6.0;
        let g = grid(8, 101, ymax);
        let k = PI / ymax;
        let shape = VProfile::from_fn(&g, |y| (k * y).sin());
        let u0 = Field2D::single_mode(&g, 1, 1.0, 0.0, &shape);
        let dt = 1e-3;
        let mut st = PrandtlStepper::new(
            &g,
            dt,
            OutflowProfile::Zero,
            0.0,
            None,
            StepperOptions {
                transport: false,
                cfl_limit: 0.5,
            },
        )
        .unwrap();
        let mut s = AnalyticState::new(u0.clone(), 0.0, 0.2, 4.0);
        for _ in 0..1000 {
            st.step(&mut s).unwrap();
        }
        let exact = u0.scaled((-k * k * s.t).exp());
        let err = s.u.sub(&exact).unwrap().l2_norm() / exact.l2_norm();
        // the first backward Euler step costs O(dt^2) locally
        assert!(err < 1e-5, "{err}");
    }

    #[test]
    fn cfl_violation_reported() {
        let g = grid(16, 121, 24.0);
        let u0 = preset_initial_data(&g, 50.0, 1);
        let mut st = PrandtlStepper::new(&g, 0.5, OutflowProfile::Zero, 0.0, None, StepperOptions::default()).unwrap();
        let mut s = AnalyticState::new(u0, 0.0, 0.2, 4.0);
        assert!(matches!(st.step(&mut s), Err(Error::Cfl { .. })));
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let spec = GridSpec::uniform(16, 2.0 * PI, 121, 24.0);
        let run = |exec| {
            let g = Grid::new(spec.clone(), exec).unwrap();
            let mut st = PrandtlStepper::new(&g, 1e-2, OutflowProfile::Zero, 0.0, None, StepperOptions::default()).unwrap();
            let mut s = AnalyticState::new(preset_initial_data(&g, 0.1, 1), 0.0, 0.2, 4.0);
            for _ in 0..20 {
                st.step(&mut s).unwrap();
            }
            s.u.coefficients().to_vec()
        };
        assert_eq!(run(Exec::Sequential), run(Exec::Parallel));
    }
}
