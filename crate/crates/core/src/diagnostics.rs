//! Analytic-radius bookkeeping, weighted analytic norms, decay regression
//! and the monitors for the decay and comparison inequalities.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corrector::{CorrectorTrajectory, CutoffTables, OutflowProfile};
use crate::error::{Error, Result};
use crate::field::{gaussian_weight, gaussian_weight_unchecked, Field2D, VProfile};
use crate::lp::{analytic_multiplier, AmplificationReport, DyadicFilterBank};
use crate::prandtl::{good_unknown, phi_from_tail, AnalyticState, InitialDataReport};

/// `‖e^{γΨ} e^{r|D_x|} a‖_{B^{1/2,0}}` evaluated literally: multiplier, then
/// weight, then Besov sum.
pub fn weighted_analytic_norm(
    bank: &DyadicFilterBank,
    a: &Field2D,
    t: f64,
    gamma: f64,
    radius: f64,
) -> Result<(f64, AmplificationReport)> {
    let (m, report) = analytic_multiplier(a, radius)?;
    let w = gaussian_weight(a.grid(), t, gamma)?;
    let weighted = m.mul_profile(&w.profile)?;
    Ok((bank.besov_norm(&weighted, 0.5)?, report))
}

/// Block norms `‖e^{γΨ} Δ_k a_Φ‖` from per-mode weighted energies; same value
/// as the literal route but without any transform.
fn blocks(bank: &DyadicFilterBank, a: &Field2D, w: &VProfile, radius: f64) -> Vec<f64> {
    bank.block_norms_from_energies(&a.mode_energies(Some(w)), radius)
}

fn max_block_ratio(num: &[f64], den: &[f64]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for (a, b) in num.iter().zip(den) {
        if *a == 0.0 && *b == 0.0 {
            continue;
        }
        let r = if *b == 0.0 { f64::INFINITY } else { a / b };
        best = Some(best.map_or(r, |m: f64| m.max(r)));
    }
    best
}

/// The three components of `θ'(t)`, each already multiplied by `<t>^{1/4}`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ThetaDot {
    pub t: f64,
    /// `<t>^{1/4} ‖e^Ψ ∂_y G^s‖`
    pub corrector: f64,
    /// `<t>^{1/4} eps |f(t)| ‖e^Ψ chi'‖`
    pub cutoff: f64,
    /// `<t>^{1/4} ‖e^Ψ ∂_y G_Φ‖_{B^{1/2,0}}`
    pub good_unknown: f64,
}

impl ThetaDot {
    pub fn new(t: f64, dgs: f64, eps_f: f64, chi_d1_weighted: f64, dyg_besov: f64) -> Self {
        let b = (1.0 + t).powf(0.25);
        ThetaDot {
            t,
            corrector: b * dgs,
            cutoff: b * eps_f.abs() * chi_d1_weighted,
            good_unknown: b * dyg_besov,
        }
    }

    pub fn total(&self) -> f64 {
        self.corrector + self.cutoff + self.good_unknown
    }
}

/// Trapezoidal integration of `θ' ` with breach detection at `θ >= δ/λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusTracker {
    delta: f64,
    lambda: f64,
    theta: f64,
    history: Vec<ThetaDot>,
    /// Running integrals of each component, aligned with `history`.
    integrals: Vec<[f64; 3]>,
}

impl RadiusTracker {
    pub fn new(delta: f64, lambda: f64) -> Self {
        RadiusTracker {
            delta,
            lambda,
            theta: 0.0,
            history: Vec::new(),
            integrals: Vec::new(),
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn radius(&self) -> f64 {
        self.delta - self.lambda * self.theta
    }
    pub fn breached(&self) -> bool {
        self.theta >= self.delta / self.lambda
    }
    pub fn history(&self) -> &[ThetaDot] {
        &self.history
    }
    pub fn component_integrals(&self) -> &[[f64; 3]] {
        &self.integrals
    }

    /// Append the integrand at `td.t` and integrate from the previous sample.
    pub fn advance(&mut self, td: ThetaDot) -> bool {
        let mut acc = self.integrals.last().copied().unwrap_or([0.0; 3]);
        if let Some(prev) = self.history.last() {
            let h = td.t - prev.t;
            acc[0] += 0.5 * h * (prev.corrector + td.corrector);
            acc[1] += 0.5 * h * (prev.cutoff + td.cutoff);
            acc[2] += 0.5 * h * (prev.good_unknown + td.good_unknown);
            self.theta += 0.5 * h * (prev.total() + td.total());
        }
        self.history.push(td);
        self.integrals.push(acc);
        self.breached()
    }
}

/// `‖e^{Ψ(t)} chi'‖_{L^2_v}`.
pub fn cutoff_weighted_norm(tables: &CutoffTables, t: f64) -> f64 {
    let grid = tables.chi_d1.grid();
    let w = gaussian_weight_unchecked(grid, t, 1.0).profile;
    tables
        .chi_d1
        .values()
        .iter()
        .zip(w.values())
        .zip(grid.quad_weights())
        .map(|((c, w), q)| (c * w).powi(2) * q)
        .sum::<f64>()
        .sqrt()
}

/// Advance `tracker` with the integrand evaluated at `t` from the corrector,
/// the outflow and `‖e^Ψ ∂_y G_Φ‖_{B^{1/2,0}}` (taken at the current radius).
pub fn theta_advance(
    tracker: &mut RadiusTracker,
    t: f64,
    corrector: &CorrectorTrajectory,
    tables: &CutoffTables,
    f: &OutflowProfile,
    epsilon: f64,
    dyg_besov: f64,
) -> ThetaDot {
    let td = ThetaDot::new(
        t,
        corrector.dgs_norm_at(t),
        epsilon * f.value(t),
        cutoff_weighted_norm(tables, t),
        dyg_besov,
    );
    tracker.advance(td);
    td
}

/// Column names of a record, in CSV order after `t, theta, radius`.
pub const NORM_KEYS: [&str; 24] = [
    "radius_used",
    "u_psi",
    "u_psi_half",
    "u_psi_3q",
    "dyu_psi",
    "g_psi",
    "dyg_psi",
    "gothic_psi",
    "u_psi_fixed",
    "g_psi_fixed",
    "u_l2",
    "theta_dot",
    "theta_dot_corrector",
    "theta_dot_cutoff",
    "theta_dot_good",
    "zero_mean_residual",
    "wall_residual",
    "mean_removed",
    "tail_u",
    "rel_33_half",
    "rel_33_3q",
    "rel_34",
    "gothic_defect",
    "amplification",
];

/// Scalars recorded at the diagnostics cadence. All Besov norms are
/// `B^{1/2,0}` norms of `e^{γΨ}` times the analytic multiplier at
/// `radius_used`, the radius before this record's θ update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub theta: f64,
    pub radius: f64,
    pub radius_used: f64,
    /// `‖e^Ψ u_Φ‖`
    pub u_psi: f64,
    /// `‖e^{Ψ/2} u_Φ‖`
    pub u_psi_half: f64,
    /// `‖e^{3Ψ/4} u_Φ‖`
    pub u_psi_3q: f64,
    /// `‖e^Ψ ∂_y u_Φ‖`
    pub dyu_psi: f64,
    /// `‖e^Ψ G_Φ‖`
    pub g_psi: f64,
    /// `‖e^Ψ g_Φ‖` with `g = ∂_y G`
    pub dyg_psi: f64,
    /// `‖e^Ψ 𝔤_Φ‖` with `𝔤 = ∂_y u + y u / (2<t>)`
    pub gothic_psi: f64,
    /// `‖e^Ψ u‖` with the fixed multiplier `e^{δ/2 |D_x|}`
    pub u_psi_fixed: f64,
    /// `‖e^Ψ G‖` with the fixed multiplier `e^{δ/2 |D_x|}`
    pub g_psi_fixed: f64,
    pub u_l2: f64,
    pub theta_dot: ThetaDot,
    /// `max_j |∫ u_j dy| / ‖u‖`
    pub zero_mean_residual: f64,
    pub wall_residual: f64,
    pub mean_removed: f64,
    /// Weighted magnitude at the last interior node relative to `‖e^Ψ u‖`.
    pub tail_u: f64,
    pub truncation_flag: bool,
    /// `sup_k ‖e^{γΨ} Δ_k u_Φ‖ / ‖e^Ψ Δ_k G_Φ‖` for γ = 1/2 and 3/4.
    pub rel_33_half: Option<f64>,
    pub rel_33_3q: Option<f64>,
    /// `sup_k ‖e^{3Ψ/4} Δ_k ∂_y u_Φ‖ / ‖e^Ψ Δ_k ∂_y G_Φ‖`.
    pub rel_34: Option<f64>,
    /// `| ‖e^Ψ (g - 𝔤)_Φ‖ - ‖e^Ψ (φ / 2<t>)_Φ‖ |`.
    pub gothic_defect: f64,
    pub amplification_flagged: bool,
}

impl DiagnosticsRecord {
    /// Values in [`NORM_KEYS`] order.
    pub fn columns(&self) -> [f64; 24] {
        let opt = |v: Option<f64>| v.unwrap_or(f64::NAN);
        [
            self.radius_used,
            self.u_psi,
            self.u_psi_half,
            self.u_psi_3q,
            self.dyu_psi,
            self.g_psi,
            self.dyg_psi,
            self.gothic_psi,
            self.u_psi_fixed,
            self.g_psi_fixed,
            self.u_l2,
            self.theta_dot.total(),
            self.theta_dot.corrector,
            self.theta_dot.cutoff,
            self.theta_dot.good_unknown,
            self.zero_mean_residual,
            self.wall_residual,
            self.mean_removed,
            self.tail_u,
            opt(self.rel_33_half),
            opt(self.rel_33_3q),
            opt(self.rel_34),
            self.gothic_defect,
            if self.amplification_flagged { 1.0 } else { 0.0 },
        ]
    }
}

/// Read-only context for [`record`].
pub struct RecordInputs<'a> {
    pub bank: &'a DyadicFilterBank,
    pub tables: &'a CutoffTables,
    pub corrector: &'a Arc<CorrectorTrajectory>,
    pub f: &'a OutflowProfile,
    pub epsilon: f64,
    pub delta: f64,
    pub tail_tol: f64,
}

/// Evaluate every monitored quantity on `state`, then advance `tracker`.
pub fn record(
    inputs: &RecordInputs<'_>,
    state: &AnalyticState,
    tracker: &mut RadiusTracker,
) -> Result<DiagnosticsRecord> {
    let bank = inputs.bank;
    let u = &state.u;
    let grid = u.grid().clone();
    let t = state.t;
    let s = 1.0 + t;
    let radius = tracker.radius().max(0.0);

    let phi = phi_from_tail(u);
    let (big_g, g) = good_unknown(u, &phi, t)?;
    let uy = u.ddy();
    let y_over = VProfile::from_fn(&grid, |y| y / (2.0 * s));
    let gothic = uy.add(&u.mul_profile(&y_over)?)?;

    let w1 = gaussian_weight_unchecked(&grid, t, 1.0).profile;
    let wh = gaussian_weight_unchecked(&grid, t, 0.5).profile;
    let w3 = gaussian_weight_unchecked(&grid, t, 0.75).profile;

    let b_u1 = blocks(bank, u, &w1, radius);
    let b_uh = blocks(bank, u, &wh, radius);
    let b_u3 = blocks(bank, u, &w3, radius);
    let b_uy1 = blocks(bank, &uy, &w1, radius);
    let b_uy3 = blocks(bank, &uy, &w3, radius);
    let b_g1 = blocks(bank, &big_g, &w1, radius);
    let b_dg1 = blocks(bank, &g, &w1, radius);
    let b_goth = blocks(bank, &gothic, &w1, radius);
    let besov = |b: &[f64]| bank.besov_from_blocks(b, 0.5);

    let fixed = 0.5 * inputs.delta;
    let u_fixed = besov(&blocks(bank, u, &w1, fixed));
    let g_fixed = besov(&blocks(bank, &big_g, &w1, fixed));

    let g_minus = g.sub(&gothic)?;
    let half_phi = phi.scaled(1.0 / (2.0 * s));
    let gothic_defect =
        (besov(&blocks(bank, &g_minus, &w1, radius)) - besov(&blocks(bank, &half_phi, &w1, radius))).abs();

    let dyg_psi = besov(&b_dg1);
    let td = theta_advance(
        tracker,
        t,
        inputs.corrector,
        inputs.tables,
        inputs.f,
        inputs.epsilon,
        dyg_psi,
    );

    let u_l2 = u.l2_norm();
    let zero_mean_residual = {
        let m = u.y_integrals().iter().map(|c| c.norm()).fold(0.0, f64::max);
        if u_l2 > 0.0 {
            m / u_l2
        } else {
            m
        }
    };
    let u_psi = besov(&b_u1);
    let tail_u = {
        let ny = grid.ny();
        let i = ny - 2;
        let mag: f64 = (0..grid.nx()).map(|j| u.mode(j)[i].norm()).sum();
        let wn = u.mode_energies(Some(&w1)).iter().sum::<f64>() * grid.length();
        if wn > 0.0 {
            mag * w1.values()[i] / wn.sqrt()
        } else {
            0.0
        }
    };
    let xi_max = grid.wavenumbers().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(DiagnosticsRecord {
        t,
        theta: tracker.theta(),
        radius: tracker.radius(),
        radius_used: radius,
        u_psi,
        u_psi_half: besov(&b_uh),
        u_psi_3q: besov(&b_u3),
        dyu_psi: besov(&b_uy1),
        g_psi: besov(&b_g1),
        dyg_psi,
        gothic_psi: besov(&b_goth),
        u_psi_fixed: u_fixed,
        g_psi_fixed: g_fixed,
        u_l2,
        theta_dot: td,
        zero_mean_residual,
        wall_residual: u.wall_residual(),
        mean_removed: state.mean_removed,
        tail_u,
        truncation_flag: tail_u > inputs.tail_tol,
        rel_33_half: max_block_ratio(&b_uh, &b_g1),
        rel_33_3q: max_block_ratio(&b_u3, &b_g1),
        rel_34: max_block_ratio(&b_uy3, &b_dg1),
        gothic_defect,
        amplification_flagged: (radius * xi_max).exp() > 1.0 / f64::EPSILON,
    })
}

/// Block-wise comparison of `u`, `φ` and `G` at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    /// `sup_k ‖e^{γΨ} Δ_k u_Φ‖ / ‖e^Ψ Δ_k G_Φ‖` for γ = 1/2.
    pub u_vs_g_half: Option<f64>,
    /// Same for γ = 3/4.
    pub u_vs_g_three_quarters: Option<f64>,
    /// `sup_k ‖e^{3Ψ/4} Δ_k ∂_y u_Φ‖ / ‖e^Ψ Δ_k ∂_y G_Φ‖`.
    pub dyu_vs_dyg: Option<f64>,
    /// `sup_k <t>^{-1} ‖e^{3Ψ/4} Δ_k ∂_y (y φ)_Φ‖ / ‖e^Ψ Δ_k ∂_y G_Φ‖`.
    pub dy_yphi_vs_dyg: Option<f64>,
    /// `max |φ - e^{-y^2/4<t>} ∫_0^y e^{y'^2/4<t>} G|`, relative to `max |φ|`.
    pub reconstruction_defect: f64,
}

pub fn relation_checks(
    bank: &DyadicFilterBank,
    u: &Field2D,
    phi: &Field2D,
    big_g: &Field2D,
    t: f64,
    radius: f64,
) -> Result<RelationReport> {
    if radius < 0.0 {
        return Err(Error::NegativeRadius { radius });
    }
    u.grid().check_same(phi.grid())?;
    u.grid().check_same(big_g.grid())?;
    let grid = u.grid().clone();
    let s = 1.0 + t;
    let w1 = gaussian_weight_unchecked(&grid, t, 1.0).profile;
    let wh = gaussian_weight_unchecked(&grid, t, 0.5).profile;
    let w3 = gaussian_weight_unchecked(&grid, t, 0.75).profile;
    let dg = big_g.ddy();
    let yphi = phi.mul_profile(&VProfile::from_fn(&grid, |y| y))?;
    let dy_yphi = yphi.ddy().scaled(1.0 / s);
    let b_g = blocks(bank, big_g, &w1, radius);
    let b_dg = blocks(bank, &dg, &w1, radius);

    let rebuilt = big_g.map_modes(|_, a, out| grid.gaussian_primitive(a, s, out));
    let scale = phi.max_abs_physical();
    let defect = rebuilt.sub(phi)?.max_abs_physical();
    Ok(RelationReport {
        u_vs_g_half: max_block_ratio(&blocks(bank, u, &wh, radius), &b_g),
        u_vs_g_three_quarters: max_block_ratio(&blocks(bank, u, &w3, radius), &b_g),
        dyu_vs_dyg: max_block_ratio(&blocks(bank, &u.ddy(), &w3, radius), &b_dg),
        dy_yphi_vs_dyg: max_block_ratio(&blocks(bank, &dy_yphi, &w3, radius), &b_dg),
        reconstruction_defect: if scale > 0.0 { defect / scale } else { defect },
    })
}

/// Fitted constants and exponents over a finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    /// `sup_t ‖e^Ψ u_Φ(t)‖ / ‖e^{y^2/8} e^{δ|D_x|} u_0‖`
    pub c_uniform: Option<f64>,
    /// `sup_t <t>^{3/4} ‖e^Ψ e^{δ/2|D_x|} u‖ / ‖e^{y^2/8} e^{δ|D_x|} u_0‖` while the radius is at least δ/2.
    pub c_u_decay: Option<f64>,
    /// `sup_t <t>^{5/4} ‖e^Ψ e^{δ/2|D_x|} G‖ / ‖e^{y^2/8} e^{δ|D_x|} G_0‖`.
    pub c_g_decay: Option<f64>,
    /// `sup_t <t>^{5/4} ‖e^{Ψ/2} u_Φ‖ / ‖e^{y^2/8} e^{δ|D_x|} u_0‖`.
    pub c_u_half_decay: Option<f64>,
    pub u_fit: Option<DecayFit>,
    pub g_fit: Option<DecayFit>,
    pub u_half_fit: Option<DecayFit>,
    pub fit_window: (f64, f64),
    /// Suprema of the block comparison ratios over `t >= 1`.
    pub rel_33_half_sup: Option<f64>,
    pub rel_33_3q_sup: Option<f64>,
    pub rel_34_sup: Option<f64>,
    /// Share of each θ' component integral accrued over the second half of the run.
    pub theta_tail_share: [Option<f64>; 3],
    pub theta_final: f64,
    pub breach: bool,
    pub max_zero_mean_residual: f64,
    pub max_wall_residual: f64,
}

fn sup_ratio(values: impl Iterator<Item = f64>, norm: f64) -> Option<f64> {
    if norm <= 0.0 {
        return None;
    }
    values.map(|v| v / norm).fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
}

fn sup_opt(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    values.flatten().fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
}

pub fn theorem_monitor(
    records: &[DiagnosticsRecord],
    tracker: &RadiusTracker,
    initial: &InitialDataReport,
    delta: f64,
) -> TheoremReport {
    let t_end = records.last().map_or(0.0, |r| r.t);
    let window = (0.1 * t_end, t_end);
    let fit = |f: fn(&DiagnosticsRecord) -> f64| {
        let series: Vec<(f64, f64)> = records.iter().map(|r| (r.t, f(r))).collect();
        decay_fit(&series, window).ok()
    };
    let fixed_ok = |r: &&DiagnosticsRecord| r.radius_used >= 0.5 * delta;
    let ints = tracker.component_integrals();
    let hist = tracker.history();
    let theta_tail_share = {
        let mut out = [None; 3];
        if let (Some(last), Some(lt)) = (ints.last(), hist.last()) {
            let half_t = 0.5 * lt.t;
            let idx = hist.partition_point(|h| h.t < half_t).min(ints.len() - 1);
            for c in 0..3 {
                if last[c] > 0.0 {
                    out[c] = Some((last[c] - ints[idx][c]) / last[c]);
                }
            }
        }
        out
    };
    TheoremReport {
        c_uniform: sup_ratio(records.iter().map(|r| r.u_psi), initial.u_norm),
        c_u_decay: sup_ratio(
            records.iter().filter(fixed_ok).map(|r| (1.0 + r.t).powf(0.75) * r.u_psi_fixed),
            initial.u_norm,
        ),
        c_g_decay: sup_ratio(
            records.iter().filter(fixed_ok).map(|r| (1.0 + r.t).powf(1.25) * r.g_psi_fixed),
            initial.g_norm,
        ),
        c_u_half_decay: sup_ratio(
            records.iter().map(|r| (1.0 + r.t).powf(1.25) * r.u_psi_half),
            initial.u_norm,
        ),
        u_fit: fit(|r| r.u_psi),
        g_fit: fit(|r| r.g_psi),
        u_half_fit: fit(|r| r.u_psi_half),
        fit_window: window,
        rel_33_half_sup: sup_opt(records.iter().filter(|r| r.t >= 1.0).map(|r| r.rel_33_half)),
        rel_33_3q_sup: sup_opt(records.iter().filter(|r| r.t >= 1.0).map(|r| r.rel_33_3q)),
        rel_34_sup: sup_opt(records.iter().filter(|r| r.t >= 1.0).map(|r| r.rel_34)),
        theta_tail_share,
        theta_final: tracker.theta(),
        breach: tracker.breached(),
        max_zero_mean_residual: records.iter().map(|r| r.zero_mean_residual).fold(0.0, f64::max),
        max_wall_residual: records.iter().map(|r| r.wall_residual).fold(0.0, f64::max),
    }
}

/// Gaussian-weighted grid helper used by tests and the verify suites.
pub fn weighted_profile_norm(p: &VProfile, t: f64, gamma: f64) -> Result<f64> {
    let w = gaussian_weight(p.grid(), t, gamma)?;
    crate::field::weighted_l2(p, &w.profile)
}


/// Least-squares fit of `log(value)` against `log(1 + t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub r2: f64,
    pub samples: usize,
}

pub fn decay_fit(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t >= window.0 && *t <= window.1)
        .cloned()
        .collect();
    if pts.len() < 10 {
        return Err(Error::Fit(format!(
            "{} samples in [{}, {}], need at least 10",
            pts.len(),
            window.0,
            window.1
        )));
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Fit(format!("nonpositive value {v} at t = {t}")));
    }
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|(t, _)| (1.0 + t).ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, v)| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all samples at the same time".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(DecayFit {
        exponent: slope,
        r2,
        samples: pts.len(),
    })
}
