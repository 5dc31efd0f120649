//! Shear corrector driven by the outflow amplitude `f(t)`.
//!
//! The good unknown `G^s` solves the damped heat problem
//! `G_t - G_yy + G / <t> = eps H` with homogeneous Dirichlet data, and the
//! corrector itself is recovered through
//! `psi = e^{-y^2/4<t>} ∫_0^y e^{+y'^2/4<t>} G dy'`, `u^s = G - (y / 2<t>) psi`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{decay_fit, DecayFit};
use crate::diffusion::{ImplicitDiffusion, LowerBoundary};
use crate::error::{Error, Result};
use crate::field::{gaussian_weight_unchecked, VProfile};
use crate::grid::Grid;
use crate::lp::smoothstep;
use crate::quadrature::adaptive_simpson;

fn flat_d(x: f64) -> (f64, f64, f64) {
    // e^{-1/x} and its first two derivatives
    if x <= 0.0 || 1.0 / x > 700.0 {
        return (0.0, 0.0, 0.0);
    }
    let h = (-1.0 / x).exp();
    let x2 = x * x;
    (h, h / x2, h * (1.0 / (x2 * x2) - 2.0 / (x2 * x)))
}

/// Wall cutoff `chi(y)`: 0 for `y <= 1`, 1 for `y >= 2`.
pub fn boundary_cutoff(y: f64) -> f64 {
    smoothstep(y - 1.0)
}

/// `(chi, chi', chi'')` at `y`.
pub fn boundary_cutoff_derivs(y: f64) -> (f64, f64, f64) {
    let x = y - 1.0;
    if x <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if x >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let (a, a1, a2) = flat_d(x);
    let (b, b1m, b2m) = flat_d(1.0 - x);
    // derivatives of h(1 - x) with respect to x
    let b1 = -b1m;
    let b2 = b2m;
    let d = a + b;
    let d1 = a1 + b1;
    let n = a1 * b - a * b1;
    let n1 = a2 * b - a * b2;
    (a / d, n / (d * d), n1 / (d * d) - 2.0 * n * d1 / (d * d * d))
}

/// `∫_y^∞ (1 - chi)`: `3/2 - y` below 1, zero above 2.
pub fn cutoff_tail(y: f64) -> f64 {
    if y <= 1.0 {
        1.5 - y
    } else if y >= 2.0 {
        0.0
    } else {
        adaptive_simpson(&|s| 1.0 - boundary_cutoff(s), y, 2.0, 1e-15)
    }
}

/// Tangential outflow amplitude `f(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OutflowProfile {
    Zero,
    /// `f(t) = t e^{-rate t}`.
    TExp { rate: f64 },
    /// `f(t) = 1 / (1 + t)`; violates `f(0) = 0` and is kept as a divergent reference.
    Reciprocal,
    /// Piecewise-linear interpolation of samples, held constant past the last one.
    Tabulated { times: Vec<f64>, values: Vec<f64> },
}

impl Default for OutflowProfile {
    fn default() -> Self {
        OutflowProfile::TExp { rate: 1.0 }
    }
}

impl OutflowProfile {
    pub fn validate(&self) -> Result<()> {
        match self {
            OutflowProfile::TExp { rate } if !(*rate > 0.0 && rate.is_finite()) => {
                return Err(Error::config("f_rate", "must be positive"));
            }
            OutflowProfile::Tabulated { times, values } => {
                if times.len() < 2 || times.len() != values.len() {
                    return Err(Error::config(
                        "f_times",
                        "needs at least two samples and one value per time",
                    ));
                }
                if times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::config("f_times", "must start at 0 and increase"));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::config("f_values", "must be finite"));
                }
            }
            _ => {}
        }
        if self.value(0.0) != 0.0 {
            return Err(Error::config("f", "must vanish at t = 0"));
        }
        Ok(())
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            OutflowProfile::Zero => 0.0,
            OutflowProfile::TExp { rate } => t * (-rate * t).exp(),
            OutflowProfile::Reciprocal => 1.0 / (1.0 + t),
            OutflowProfile::Tabulated { times, values } => {
                let n = times.len();
                if t >= times[n - 1] {
                    return values[n - 1];
                }
                let i = times.partition_point(|&s| s <= t).max(1) - 1;
                let w = (t - times[i]) / (times[i + 1] - times[i]);
                values[i] * (1.0 - w) + values[i + 1] * w
            }
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            OutflowProfile::Zero => 0.0,
            OutflowProfile::TExp { rate } => (1.0 - rate * t) * (-rate * t).exp(),
            OutflowProfile::Reciprocal => -1.0 / ((1.0 + t) * (1.0 + t)),
            OutflowProfile::Tabulated { times, values } => {
                let n = times.len();
                if t >= times[n - 1] {
                    return 0.0;
                }
                let i = times.partition_point(|&s| s <= t).max(1) - 1;
                (values[i + 1] - values[i]) / (times[i + 1] - times[i])
            }
        }
    }

    /// Stable textual key, used for cache hashing.
    pub fn key(&self) -> String {
        serde_json::to_string(self).expect("profile serializes")
    }
}

/// Sources `m = (1 - chi) f' + f chi''`, `M = -I f' + f chi'` and
/// `H = m + (y / 2<t>) M`, with `I(y) = ∫_y^∞ (1 - chi)`.
#[derive(Debug, Clone)]
pub struct Sources {
    pub m: VProfile,
    pub big_m: VProfile,
    pub h: VProfile,
}

/// Time-independent ingredients of the sources on a grid.
#[derive(Debug, Clone)]
pub struct CutoffTables {
    pub chi: VProfile,
    pub chi_d1: VProfile,
    pub chi_d2: VProfile,
    pub tail: VProfile,
}

impl CutoffTables {
    pub fn new(grid: &Arc<Grid>) -> Self {
        CutoffTables {
            chi: VProfile::from_fn(grid, |y| boundary_cutoff_derivs(y).0),
            chi_d1: VProfile::from_fn(grid, |y| boundary_cutoff_derivs(y).1),
            chi_d2: VProfile::from_fn(grid, |y| boundary_cutoff_derivs(y).2),
            tail: VProfile::from_fn(grid, cutoff_tail),
        }
    }

    pub fn sources(&self, f: &OutflowProfile, t: f64) -> Sources {
        let (fv, fd) = (f.value(t), f.derivative(t));
        let s = 1.0 + t;
        let grid = self.chi.grid();
        let n = grid.ny();
        let y = grid.y();
        let mut m = vec![0.0; n];
        let mut big_m = vec![0.0; n];
        let mut h = vec![0.0; n];
        for i in 0..n {
            m[i] = (1.0 - self.chi.values()[i]) * fd + fv * self.chi_d2.values()[i];
            big_m[i] = -self.tail.values()[i] * fd + fv * self.chi_d1.values()[i];
            h[i] = m[i] + y[i] / (2.0 * s) * big_m[i];
        }
        Sources {
            m: VProfile::from_values(grid, m).expect("sized"),
            big_m: VProfile::from_values(grid, big_m).expect("sized"),
            h: VProfile::from_values(grid, h).expect("sized"),
        }
    }
}

pub fn sources(grid: &Arc<Grid>, f: &OutflowProfile, t: f64) -> Sources {
    CutoffTables::new(grid).sources(f, t)
}

/// `(psi^s, u^s)` from `G^s` at time `t`.
pub fn reconstruct_us(gs: &VProfile, t: f64) -> (VProfile, VProfile) {
    let grid = gs.grid();
    let s = 1.0 + t;
    let mut psi = vec![0.0; grid.ny()];
    grid.gaussian_primitive(gs.values(), s, &mut psi);
    let us: Vec<f64> = grid
        .y()
        .iter()
        .zip(gs.values())
        .zip(&psi)
        .map(|((y, g), p)| g - y / (2.0 * s) * p)
        .collect();
    (
        VProfile::from_values(grid, psi).expect("sized"),
        VProfile::from_values(grid, us).expect("sized"),
    )
}

/// `∂_y u^s` from the closed-form identity, avoiding a second difference
/// of `psi`.
pub fn us_derivative(gs: &VProfile, psi: &VProfile, t: f64) -> VProfile {
    let s = 1.0 + t;
    let dg = gs.ddy();
    let grid = gs.grid();
    let vals = (0..grid.ny())
        .map(|i| {
            let y = grid.y()[i];
            (-1.0 / (2.0 * s) + y * y / (4.0 * s * s)) * psi.values()[i]
                - y / (2.0 * s) * gs.values()[i]
                + dg.values()[i]
        })
        .collect();
    VProfile::from_values(grid, vals).expect("sized")
}

/// Snapshot of the corrector at one time.
#[derive(Debug, Clone)]
pub struct CorrectorState {
    pub t: f64,
    pub epsilon: f64,
    pub gs: VProfile,
    pub psis: VProfile,
    pub us: VProfile,
}

impl CorrectorState {
    pub fn new(gs: VProfile, t: f64, epsilon: f64) -> Self {
        let (psis, us) = reconstruct_us(&gs, t);
        CorrectorState {
            t,
            epsilon,
            gs,
            psis,
            us,
        }
    }

    /// Largest node-wise defect of `G = u + (y / 2<t>) psi`.
    pub fn identity_defect(&self) -> f64 {
        let s = 1.0 + self.t;
        let y = self.gs.grid().y();
        (0..y.len())
            .map(|i| {
                (self.gs.values()[i] - self.us.values()[i] - y[i] / (2.0 * s) * self.psis.values()[i])
                    .abs()
            })
            .fold(0.0, f64::max)
    }
}

/// One step of the discrete energy balance
/// `d/dt‖e^Ψ G‖² + ‖e^Ψ ∂_y G‖² + 2<t>^{-1}‖e^Ψ G‖² <= 2 eps ‖e^Ψ G‖ ‖e^Ψ H‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub t_mid: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl EnergyRecord {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + self.slack
    }
}

/// Weighted norms of one stored corrector sample, at the trajectory's amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CorrectorNorms {
    pub t: f64,
    /// `‖e^Ψ G^s‖`
    pub gs: f64,
    /// `‖e^Ψ ∂_y G^s‖`
    pub dgs: f64,
    /// `‖e^{Ψ/2} ∂_y u^s‖`
    pub dus_half: f64,
    /// `‖e^{3Ψ/4} ∂_y u^s‖`
    pub dus_three_quarters: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectorParams {
    pub f: OutflowProfile,
    pub epsilon: f64,
    pub t_final: f64,
    pub dt: f64,
    /// Store every `stride`-th step.
    pub stride: usize,
}

impl CorrectorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("dt", "must be positive"));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::config("t_final", "must be nonnegative"));
        }
        if self.stride == 0 {
            return Err(Error::config("stride", "must be at least 1"));
        }
        if !self.epsilon.is_finite() {
            return Err(Error::config("epsilon", "must be finite"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

/// Stored corrector trajectory. Profiles are kept for `G^s`, `u^s` and
/// `∂_y u^s` at every stored time.
#[derive(Debug, Clone)]
pub struct CorrectorTrajectory {
    grid: Arc<Grid>,
    params: CorrectorParams,
    times: Vec<f64>,
    gs: Vec<Vec<f64>>,
    us: Vec<Vec<f64>>,
    dus: Vec<Vec<f64>>,
    norms: Vec<CorrectorNorms>,
    energy: Vec<EnergyRecord>,
}

fn sample_norms(gs: &VProfile, us_d: &VProfile, t: f64) -> CorrectorNorms {
    let grid = gs.grid();
    let w1 = gaussian_weight_unchecked(grid, t, 1.0).profile;
    let wh = gaussian_weight_unchecked(grid, t, 0.5).profile;
    let w3 = gaussian_weight_unchecked(grid, t, 0.75).profile;
    let norm = |a: &VProfile, w: &VProfile| {
        a.values()
            .iter()
            .zip(w.values())
            .zip(grid.quad_weights())
            .map(|((a, w), q)| (a * w).powi(2) * q)
            .sum::<f64>()
            .sqrt()
    };
    CorrectorNorms {
        t,
        gs: norm(gs, &w1),
        dgs: norm(&gs.ddy(), &w1),
        dus_half: norm(us_d, &wh),
        dus_three_quarters: norm(us_d, &w3),
    }
}

/// Integrate the `G^s` problem with Crank-Nicolson, damping and source at
/// the step midpoint.
pub fn solve_gs(grid: &Arc<Grid>, params: &CorrectorParams) -> Result<CorrectorTrajectory> {
    params.validate()?;
    params.f.validate()?;
    let tables = CutoffTables::new(grid);
    let n = grid.ny();
    let dt = params.dt;
    let steps = params.steps();
    let eps = params.epsilon;
    let h2 = {
        let y = grid.y();
        (1..n).map(|i| y[i] - y[i - 1]).fold(0.0, f64::max)
    };

    let mut traj = CorrectorTrajectory {
        grid: grid.clone(),
        params: params.clone(),
        times: Vec::new(),
        gs: Vec::new(),
        us: Vec::new(),
        dus: Vec::new(),
        norms: Vec::new(),
        energy: Vec::with_capacity(steps),
    };
    let mut g = vec![0.0; n];
    traj.store(&g, 0.0);

    let weighted = |a: &[f64], w: &[f64]| -> f64 {
        a.iter()
            .zip(w)
            .zip(grid.quad_weights())
            .map(|((a, w), q)| (a * w).powi(2) * q)
            .sum::<f64>()
    };
    let mut forcing = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut dg_old = vec![0.0; n];
    let mut dg_new = vec![0.0; n];
    for step in 0..steps {
        let t0 = step as f64 * dt;
        let t1 = (step + 1) as f64 * dt;
        let tm = 0.5 * (t0 + t1);
        let damping = 1.0 / (1.0 + tm);
        let op = ImplicitDiffusion::new(grid, dt, damping, 0.5, LowerBoundary::Dirichlet)?;
        let src = tables.sources(&params.f, tm);
        for (fo, h) in forcing.iter_mut().zip(src.h.values()) {
            *fo = eps * h;
        }
        let g_old = g.clone();
        op.advance(&mut g, &forcing, &mut scratch);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericFault {
                t: t1,
                what: "corrector profile is not finite".into(),
            });
        }

        // discrete energy balance with all quantities at the midpoint
        let w = gaussian_weight_unchecked(grid, tm, 1.0).profile;
        let w0 = gaussian_weight_unchecked(grid, t0, 1.0).profile;
        let w1 = gaussian_weight_unchecked(grid, t1, 1.0).profile;
        let e0 = weighted(&g_old, w0.values());
        let e1 = weighted(&g, w1.values());
        grid.ddy_slice(&g_old, &mut dg_old);
        grid.ddy_slice(&g, &mut dg_new);
        let gm: Vec<f64> = g_old.iter().zip(&g).map(|(a, b)| 0.5 * (a + b)).collect();
        let dgm: Vec<f64> = dg_old.iter().zip(&dg_new).map(|(a, b)| 0.5 * (a + b)).collect();
        let em = weighted(&gm, w.values());
        let dissipation = weighted(&dgm, w.values());
        let hm = weighted(src.h.values(), w.values()).sqrt();
        let lhs = (e1 - e0) / dt + dissipation + 2.0 * damping * em;
        let rhs = 2.0 * eps.abs() * em.sqrt() * hm;
        let scale = (e1 - e0).abs() / dt + dissipation + 2.0 * damping * em + rhs;
        let slack = 10.0 * (dt * dt + h2.powi(4)) * scale;
        traj.energy.push(EnergyRecord {
            t_mid: tm,
            lhs,
            rhs,
            slack,
        });

        if (step + 1) % params.stride == 0 || step + 1 == steps {
            traj.store(&g, t1);
        }
    }
    Ok(traj)
}

impl CorrectorTrajectory {
    fn store(&mut self, g: &[f64], t: f64) {
        let gs = VProfile::from_values(&self.grid, g.to_vec()).expect("sized");
        let (psi, us) = reconstruct_us(&gs, t);
        let dus = us_derivative(&gs, &psi, t);
        self.norms.push(sample_norms(&gs, &dus, t));
        self.times.push(t);
        self.gs.push(gs.into_values());
        self.us.push(us.into_values());
        self.dus.push(dus.into_values());
    }

    /// Reassemble from stored parts (used by the on-disk cache).
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        grid: &Arc<Grid>,
        params: CorrectorParams,
        times: Vec<f64>,
        gs: Vec<Vec<f64>>,
        energy: Vec<EnergyRecord>,
    ) -> Result<Self> {
        if times.len() != gs.len() || gs.iter().any(|g| g.len() != grid.ny()) {
            return Err(Error::Consistency("corrector samples do not match the grid".into()));
        }
        let mut traj = CorrectorTrajectory {
            grid: grid.clone(),
            params,
            times: Vec::new(),
            gs: Vec::new(),
            us: Vec::new(),
            dus: Vec::new(),
            norms: Vec::new(),
            energy,
        };
        for (t, g) in times.iter().zip(&gs) {
            traj.store(g, *t);
        }
        Ok(traj)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn params(&self) -> &CorrectorParams {
        &self.params
    }
    pub fn epsilon(&self) -> f64 {
        self.params.epsilon
    }
    pub fn times(&self) -> &[f64] {
        &self.times
    }
    pub fn gs_samples(&self) -> &[Vec<f64>] {
        &self.gs
    }
    pub fn norms(&self) -> &[CorrectorNorms] {
        &self.norms
    }
    pub fn energy_records(&self) -> &[EnergyRecord] {
        &self.energy
    }

    /// Same trajectory at amplitude `epsilon` (the problem is linear in it).
    pub fn with_epsilon(&self, epsilon: f64) -> CorrectorTrajectory {
        let base = self.params.epsilon;
        let r = if base == 0.0 { 0.0 } else { epsilon / base };
        let scale = |v: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            v.iter().map(|p| p.iter().map(|x| x * r).collect()).collect()
        };
        CorrectorTrajectory {
            grid: self.grid.clone(),
            params: CorrectorParams {
                epsilon,
                ..self.params.clone()
            },
            times: self.times.clone(),
            gs: scale(&self.gs),
            us: scale(&self.us),
            dus: scale(&self.dus),
            norms: self
                .norms
                .iter()
                .map(|n| CorrectorNorms {
                    t: n.t,
                    gs: n.gs * r.abs(),
                    dgs: n.dgs * r.abs(),
                    dus_half: n.dus_half * r.abs(),
                    dus_three_quarters: n.dus_three_quarters * r.abs(),
                })
                .collect(),
            energy: self
                .energy
                .iter()
                .map(|e| EnergyRecord {
                    t_mid: e.t_mid,
                    lhs: e.lhs * r * r,
                    rhs: e.rhs * r * r,
                    slack: e.slack * r * r,
                })
                .collect(),
        }
    }

    fn bracket(&self, t: f64) -> (usize, usize, f64) {
        let n = self.times.len();
        if n == 1 || t <= self.times[0] {
            return (0, 0, 0.0);
        }
        if t >= self.times[n - 1] {
            return (n - 1, n - 1, 0.0);
        }
        let hi = self.times.partition_point(|&s| s <= t);
        let lo = hi - 1;
        let w = (t - self.times[lo]) / (self.times[hi] - self.times[lo]);
        (lo, hi, w)
    }

    fn interp(&self, data: &[Vec<f64>], t: f64, out: &mut [f64]) {
        let (lo, hi, w) = self.bracket(t);
        for ((o, a), b) in out.iter_mut().zip(&data[lo]).zip(&data[hi]) {
            *o = a * (1.0 - w) + b * w;
        }
    }

    /// `u^s(t)` and `∂_y u^s(t)` by linear interpolation between samples.
    pub fn shear_at(&self, t: f64, us: &mut [f64], dus: &mut [f64]) {
        self.interp(&self.us, t, us);
        self.interp(&self.dus, t, dus);
    }

    pub fn gs_at(&self, t: f64) -> VProfile {
        let mut g = vec![0.0; self.grid.ny()];
        self.interp(&self.gs, t, &mut g);
        VProfile::from_values(&self.grid, g).expect("sized")
    }

    pub fn state_at(&self, t: f64) -> CorrectorState {
        CorrectorState::new(self.gs_at(t), t, self.params.epsilon)
    }

    /// `‖e^Ψ ∂_y G^s(t)‖`, interpolated between samples.
    pub fn dgs_norm_at(&self, t: f64) -> f64 {
        let (lo, hi, w) = self.bracket(t);
        self.norms[lo].dgs * (1.0 - w) + self.norms[hi].dgs * w
    }
}

fn trapezoid(t: &[f64], v: &[f64], lo: f64, hi: f64) -> f64 {
    let mut s = 0.0;
    for i in 1..t.len() {
        let (a, b) = (t[i - 1], t[i]);
        if b <= lo || a >= hi {
            continue;
        }
        // samples are aligned with window edges in practice; clip linearly otherwise
        let (ca, cb) = (a.max(lo), b.min(hi));
        let va = v[i - 1] + (v[i] - v[i - 1]) * (ca - a) / (b - a);
        let vb = v[i - 1] + (v[i] - v[i - 1]) * (cb - a) / (b - a);
        s += 0.5 * (cb - ca) * (va + vb);
    }
    s
}

/// Integral of `<t>^{1/4} ‖·‖` over `[0, T]`, its dyadic-window pieces and
/// tail increments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeIntegralReport {
    pub total: f64,
    pub half_horizon: f64,
    /// `total / half_horizon - 1`, or 0 when both vanish.
    pub tail_increment: f64,
    /// `(j, ∫_{2^j}^{2^{j+1}})` for every window inside `[1, T]`.
    pub windows: Vec<(i32, f64)>,
    /// Ratios of consecutive window integrals.
    pub window_ratios: Vec<f64>,
}

fn time_integral(times: &[f64], vals: &[f64], t_final: f64) -> TimeIntegralReport {
    let weighted: Vec<f64> = times
        .iter()
        .zip(vals)
        .map(|(t, v)| (1.0 + t).powf(0.25) * v)
        .collect();
    let total = trapezoid(times, &weighted, 0.0, t_final);
    let half_horizon = trapezoid(times, &weighted, 0.0, 0.5 * t_final);
    let tail_increment = if half_horizon > 0.0 {
        total / half_horizon - 1.0
    } else {
        0.0
    };
    let mut windows = Vec::new();
    let mut j = 0;
    while 2f64.powi(j + 1) <= t_final * (1.0 + 1e-12) {
        windows.push((j, trapezoid(times, &weighted, 2f64.powi(j), 2f64.powi(j + 1))));
        j += 1;
    }
    let window_ratios = windows
        .windows(2)
        .map(|w| if w[0].1 > 0.0 { w[1].1 / w[0].1 } else { 0.0 })
        .collect();
    TimeIntegralReport {
        total,
        half_horizon,
        tail_increment,
        windows,
        window_ratios,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectorDecayReport {
    /// `∫ <t>^{1/4} ‖e^Ψ ∂_y G^s‖ dt`
    pub dgs_integral: TimeIntegralReport,
    /// `∫ <t>^{1/4} ‖e^{Ψ/2} ∂_y u^s‖ dt`
    pub dus_half_integral: TimeIntegralReport,
    /// `∫ <t>^{1/4} ‖e^{3Ψ/4} ∂_y u^s‖ dt`
    pub dus_three_quarters_integral: TimeIntegralReport,
    /// `sup_t ‖<t>^{5/4} e^Ψ G^s(t)‖`
    pub weighted_gs_sup: f64,
    /// Decay fit of `‖e^Ψ G^s‖` over the last decade of the horizon.
    pub gs_fit: Option<DecayFit>,
    /// Decay fit of `‖<t>^{5/4} e^Ψ G^s‖` over the same window.
    pub weighted_gs_fit: Option<DecayFit>,
    pub energy_violations: usize,
}

pub fn corrector_decay_report(traj: &CorrectorTrajectory) -> CorrectorDecayReport {
    corrector_decay_report_in(traj, (0.1 * traj.params.t_final, traj.params.t_final))
}

/// Decay report with the fit window given explicitly.
pub fn corrector_decay_report_in(traj: &CorrectorTrajectory, window: (f64, f64)) -> CorrectorDecayReport {
    let t = traj.times();
    let col = |f: fn(&CorrectorNorms) -> f64| -> Vec<f64> { traj.norms.iter().map(f).collect() };
    let t_final = traj.params.t_final;
    let gs = col(|n| n.gs);
    let weighted: Vec<f64> = t.iter().zip(&gs).map(|(t, g)| (1.0 + t).powf(1.25) * g).collect();
    let fit_of = |vals: &[f64]| {
        let series: Vec<(f64, f64)> = t.iter().cloned().zip(vals.iter().cloned()).collect();
        decay_fit(&series, window).ok()
    };
    CorrectorDecayReport {
        dgs_integral: time_integral(t, &col(|n| n.dgs), t_final),
        dus_half_integral: time_integral(t, &col(|n| n.dus_half), t_final),
        dus_three_quarters_integral: time_integral(t, &col(|n| n.dus_three_quarters), t_final),
        weighted_gs_sup: weighted.iter().cloned().fold(0.0, f64::max),
        gs_fit: fit_of(&gs),
        weighted_gs_fit: fit_of(&weighted),
        energy_violations: traj.energy.iter().filter(|e| !e.holds()).count(),
    }
}

/// The two terms of `C_f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfConstant {
    /// `∫ <t>^{5/4} (|f| + |f'|)`
    pub linear_term: f64,
    /// `(∫ <t>^{7/2} (f^2 + f'^2))^{1/2}`
    pub quadratic_term: f64,
}

impl CfConstant {
    pub fn value(&self) -> f64 {
        self.linear_term + self.quadratic_term
    }
}

/// Integrate over `[0, ∞)` on dyadic panels until the panel contribution is
/// negligible. A panel `[T, 2T]` that still carries at least 0.1% of the
/// running total once `T` exceeds `2^40` counts as divergence.
fn half_line_integral(term: &str, f: impl Fn(f64) -> f64) -> Result<f64> {
    let mut total = adaptive_simpson(&f, 0.0, 1.0, 1e-15);
    let mut lo = 1.0f64;
    let mut converged_once = false;
    loop {
        let hi = 2.0 * lo;
        let piece = adaptive_simpson(&f, lo, hi, 1e-15 * (1.0 + total.abs()));
        total += piece;
        if !piece.is_finite() {
            return Err(Error::Divergent {
                term: term.into(),
                detail: format!("non-finite integrand on [{lo}, {hi}]"),
            });
        }
        let rel = if total == 0.0 { 0.0 } else { piece.abs() / total.abs() };
        if rel < 1e-3 {
            converged_once = true;
        }
        if converged_once && rel < 1e-15 {
            return Ok(total);
        }
        if lo >= 2f64.powi(40) {
            if converged_once && rel < 1e-3 {
                return Ok(total);
            }
            return Err(Error::Divergent {
                term: term.into(),
                detail: format!("tail over [{lo:e}, {hi:e}] is {:.2}% of the total", 100.0 * rel),
            });
        }
        lo = hi;
    }
}

pub fn cf_constant(f: &OutflowProfile) -> Result<CfConstant> {
    let lin = half_line_integral("<t>^{5/4}(|f| + |f'|)", |t| {
        (1.0 + t).powf(1.25) * (f.value(t).abs() + f.derivative(t).abs())
    })?;
    let quad = half_line_integral("<t>^{7/2}(f^2 + f'^2)", |t| {
        let (a, b) = (f.value(t), f.derivative(t));
        (1.0 + t).powf(3.5) * (a * a + b * b)
    })?;
    Ok(CfConstant {
        linear_term: lin,
        quadratic_term: quad.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Exec;
    use crate::grid::GridSpec;

    fn grid(ny: usize, ymax: f64) -> Arc<Grid> {
        Grid::new(GridSpec::uniform(8, 1.0, ny, ymax), Exec::Sequential).unwrap()
    }

    #[test]
    fn cutoff_shape() {
        assert_eq!(boundary_cutoff(0.5), 0.0);
        assert_eq!(boundary_cutoff(3.0), 1.0);
        assert_eq!(boundary_cutoff_derivs(0.9).1, 0.0);
        assert_eq!(boundary_cutoff_derivs(2.1).1, 0.0);
        let int = adaptive_simpson(&|y| boundary_cutoff_derivs(y).1, 0.0, 3.0, 1e-14);
        assert!((int - 1.0).abs() < 1e-10);
        // derivatives agree with differences of the cutoff itself
        for &y in &[1.2, 1.5, 1.77] {
            let h = 1e-5;
            let (_, d1, d2) = boundary_cutoff_derivs(y);
            let fd1 = (boundary_cutoff(y + h) - boundary_cutoff(y - h)) / (2.0 * h);
            let fd2 = (boundary_cutoff_derivs(y + h).1 - boundary_cutoff_derivs(y - h).1) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-7);
            assert!((d2 - fd2).abs() < 1e-6);
        }
        assert!((cutoff_tail(0.0) - 1.5).abs() < 1e-15);
        assert!((cutoff_tail(1.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sources_support_and_derivative() {
        let g = grid(801, 4.0);
        let f = OutflowProfile::default();
        let s = sources(&g, &f, 0.7);
        for (y, (m, big)) in g.y().iter().zip(s.m.values().iter().zip(s.big_m.values())) {
            if *y >= 2.0 {
                assert_eq!(*m, 0.0);
                assert_eq!(*big, 0.0);
            }
        }
        let dm = s.big_m.ddy();
        let err = dm
            .values()
            .iter()
            .zip(s.m.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
        let z = sources(&g, &OutflowProfile::Zero, 1.0);
        assert_eq!(z.h.max_abs(), 0.0);
    }

    #[test]
    fn reconstruction_round_trip() {
        let g = grid(2001, 20.0);
        let gs = VProfile::from_fn(&g, |y| y * (-y * y / 4.0).exp());
        let state = CorrectorState::new(gs.clone(), 0.0, 1.0);
        assert_eq!(state.psis.values()[0], 0.0);
        assert_eq!(state.us.values()[0], 0.0);
        let dpsi = state.psis.ddy();
        let err = (0..g.ny())
            .map(|i| {
                let y = g.y()[i];
                (dpsi.values()[i] + 0.5 * y * state.psis.values()[i] - gs.values()[i]).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
        assert!(state.identity_defect() < 1e-12);
    }

    #[test]
    fn zero_amplitude_gives_zero_corrector() {
        let g = grid(101, 10.0);
        let p = CorrectorParams {
            f: OutflowProfile::default(),
            epsilon: 0.0,
            t_final: 1.0,
            dt: 0.01,
            stride: 10,
        };
        let traj = solve_gs(&g, &p).unwrap();
        assert!(traj.gs_samples().iter().all(|s| s.iter().all(|&v| v == 0.0)));
        let r = corrector_decay_report(&traj);
        assert_eq!(r.dgs_integral.total, 0.0);
    }

    #[test]
    fn linear_in_amplitude() {
        let g = grid(121, 12.0);
        let p = CorrectorParams {
            f: OutflowProfile::default(),
            epsilon: 1e-3,
            t_final: 2.0,
            dt: 0.01,
            stride: 5,
        };
        let a = solve_gs(&g, &p).unwrap();
        let b = solve_gs(&g, &CorrectorParams { epsilon: 2e-3, ..p.clone() }).unwrap();
        for (x, y) in a.gs_samples().iter().flatten().zip(b.gs_samples().iter().flatten()) {
            assert!((2.0 * x - y).abs() <= 1e-12 * y.abs().max(1e-300) + 1e-300);
        }
        let c = a.with_epsilon(2e-3);
        for (x, y) in c.gs_samples().iter().flatten().zip(b.gs_samples().iter().flatten()) {
            assert!((x - y).abs() <= 1e-12 * y.abs() + 1e-300);
        }
        assert!(a.energy_records().iter().all(|e| e.holds()));
    }

    #[test]
    fn cf_values() {
        assert_eq!(cf_constant(&OutflowProfile::Zero).unwrap().value(), 0.0);
        let c = cf_constant(&OutflowProfile::default()).unwrap();
        assert!((c.linear_term - 6.69659556634066).abs() < 1e-9);
        assert!((c.quadratic_term - 3.76361829579355).abs() < 1e-9);
        assert!((c.value() - 10.460213862134212).abs() < 1e-9);
        match cf_constant(&OutflowProfile::Reciprocal) {
            Err(Error::Divergent { term, .. }) => assert!(term.contains("5/4")),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn profile_validation() {
        assert!(OutflowProfile::Reciprocal.validate().is_err());
        assert!(OutflowProfile::default().validate().is_ok());
        let tab = OutflowProfile::Tabulated {
            times: vec![0.0, 1.0, 2.0],
            values: vec![0.0, 1.0, 0.0],
        };
        assert!(tab.validate().is_ok());
        assert_eq!(tab.value(0.5), 0.5);
        assert_eq!(tab.derivative(1.5), -1.0);
    }
}
