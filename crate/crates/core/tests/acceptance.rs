//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always reach stdout; exits nonzero if any fail.
//!
//! The long runs need the optimized test profile (set in the workspace
//! manifest); the whole target takes a few minutes on one core.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use prandtl_core::cache::corrector_for;
use prandtl_core::config::{Preset, ScenarioConfig};
use prandtl_core::corrector::{corrector_decay_report, CorrectorTrajectory};
use prandtl_core::diagnostics::theorem_monitor;
use prandtl_core::prandtl::{build_grid, run_with_corrector, RunOutcome};
use prandtl_core::verify::{corrector_check_setup, g0_errors, heat_oracle_error, run_suite, Suite};

struct Line {
    id: &'static str,
    passed: bool,
    detail: String,
}

fn line(id: &'static str, passed: bool, detail: String) -> Line {
    Line { id, passed, detail }
}

fn suite_line(id: &'static str, suite: Suite, budget_s: f64) -> Line {
    let start = Instant::now();
    let rep = run_suite(suite).expect("suite runs");
    let secs = start.elapsed().as_secs_f64();
    let failed: Vec<String> = rep.failures().map(|c| c.to_string()).collect();
    let detail = format!(
        "{} checks, {} failed{}; runtime {secs:.2} s (budget {budget_s} s)",
        rep.checks.len(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" [{}]", failed.join("; ")) }
    );
    line(id, failed.is_empty() && secs < budget_s, detail)
}

fn run(cfg: &ScenarioConfig) -> (RunOutcome, Arc<CorrectorTrajectory>, f64) {
    let start = Instant::now();
    let grid = build_grid(cfg).unwrap();
    let (corr, _) = corrector_for(&grid, &cfg.corrector_params().unwrap(), None).unwrap();
    let out = run_with_corrector(cfg, &grid, corr.clone(), &mut ()).unwrap();
    (out, corr, start.elapsed().as_secs_f64())
}

fn in_range(v: Option<f64>, lo: f64, hi: f64) -> bool {
    v.is_some_and(|v| v >= lo && v <= hi)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("undefined".into(), |v| format!("{v:.4}"))
}

fn main() -> ExitCode {
    let mut lines = Vec::new();

    // 1. Treves inequality
    lines.push(suite_line("1 treves", Suite::Treves, 10.0));

    // 2. LP suite
    lines.push(suite_line("2 lp", Suite::Lp, 30.0));

    // 3. corrector decay
    {
        let start = Instant::now();
        let (grid, params) = corrector_check_setup().unwrap();
        let (traj, _) = corrector_for(&grid, &params, None).unwrap();
        let rep = corrector_decay_report(&traj);
        let secs = start.elapsed().as_secs_f64();
        let exponent = rep.gs_fit.map(|f| f.exponent);
        let worst = rep.dgs_integral.window_ratios.iter().cloned().fold(0.0, f64::max);
        let cap = 2f64.powf(-0.5) * 1.3;
        let ok = exponent.is_some_and(|e| e <= -1.25 + 0.15)
            && rep.dgs_integral.tail_increment < 0.01
            && worst <= cap
            && secs < 60.0;
        lines.push(line(
            "3 corrector decay",
            ok,
            format!(
                "exponent {} (<= -1.10); integral increase T=100..200 {:.3e} (< 1e-2); max window ratio {worst:.4} (<= {cap:.4}), ratios {:?}; runtime {secs:.2} s",
                fmt_opt(exponent),
                rep.dgs_integral.tail_increment,
                rep.dgs_integral.window_ratios.iter().map(|r| (r * 1e4).round() / 1e4).collect::<Vec<_>>()
            ),
        ));
    }

    // 4. G0 identity
    {
        let start = Instant::now();
        let (_, g) = g0_errors().unwrap();
        let secs = start.elapsed().as_secs_f64();
        lines.push(line(
            "4 g0 identity",
            g <= 1e-10 && secs < 1.0,
            format!("max node error {g:.3e} (<= 1e-10); runtime {secs:.3} s"),
        ));
    }

    // 5-7. the small-data run, plus a dt-halved rerun for 5e
    let cfg = Preset::find("smalldata-decay").unwrap().config;
    let (out, corr, secs) = run(&cfg);
    let mon = theorem_monitor(&out.records, &out.tracker, &out.initial, cfg.delta);
    let completed = out.status.is_completed();
    let theta = out.tracker.theta();
    let cap = cfg.delta / (2.0 * cfg.lambda);
    lines.push(line(
        "5a global run",
        completed && theta < cap && secs < 600.0,
        format!(
            "status {:?}, theta(T) = {theta:.4e} (< {cap}), runtime {secs:.1} s",
            out.status
        ),
    ));
    let exp = |f: Option<prandtl_core::diagnostics::DecayFit>| f.map(|f| f.exponent);
    let u = exp(mon.u_fit);
    lines.push(line(
        "5b u decay",
        in_range(u, -0.95, -0.55),
        format!("exponent {} in [-0.95, -0.55] over [10, 100]", fmt_opt(u)),
    ));
    let g = exp(mon.g_fit);
    lines.push(line(
        "5c G decay",
        in_range(g, -1.45, -1.05),
        format!("exponent {} in [-1.45, -1.05] over [10, 100]", fmt_opt(g)),
    ));
    let uh = exp(mon.u_half_fit);
    lines.push(line(
        "5d u half-weight decay",
        in_range(uh, -1.45, -1.05),
        format!("exponent {} in [-1.45, -1.05] over [10, 100]", fmt_opt(uh)),
    ));
    {
        let half = ScenarioConfig {
            dt: 0.5 * cfg.dt,
            output_every: 2 * cfg.output_every,
            ..cfg.clone()
        };
        let (out2, _, _) = run(&half);
        let mon2 = theorem_monitor(&out2.records, &out2.tracker, &out2.initial, half.delta);
        let change = match (mon.c_uniform, mon2.c_uniform) {
            (Some(a), Some(b)) => (a - b).abs() / a,
            _ => f64::NAN,
        };
        lines.push(line(
            "5e uniform bound",
            change < 0.1,
            format!(
                "C = {} (dt = {}), {} (dt = {}), relative change {change:.3e} (< 0.1)",
                fmt_opt(mon.c_uniform),
                cfg.dt,
                fmt_opt(mon2.c_uniform),
                half.dt
            ),
        ));
    }
    lines.push(line(
        "6 constraints",
        mon.max_zero_mean_residual <= 1e-8 && mon.max_wall_residual == 0.0,
        format!(
            "max |int u dy| / |u| = {:.3e} (<= 1e-8), max wall residual {:.1e} (== 0)",
            mon.max_zero_mean_residual, mon.max_wall_residual
        ),
    ));

    {
        let (grid, params) = corrector_check_setup().unwrap();
        let (c3, _) = corrector_for(&grid, &params, None).unwrap();
        let v_run = corrector_decay_report(&corr).energy_violations;
        let v_c3 = corrector_decay_report(&c3).energy_violations;
        lines.push(line(
            "7 energy inequality",
            v_run == 0 && v_c3 == 0,
            format!(
                "violations: {v_run} of {} steps (run 5 corrector), {v_c3} of {} steps (criterion 3 corrector)",
                corr.energy_records().len(),
                c3.energy_records().len()
            ),
        ));
    }

    // 8. heat oracle, dy = 0.06
    {
        let err = heat_oracle_error(101, 6.0, 1e-3).unwrap();
        lines.push(line(
            "8 heat oracle",
            err <= 1e-4,
            format!("relative error {err:.3e} (<= 1e-4)"),
        ));
    }

    let mut failed = 0;
    for l in &lines {
        println!("{} {}: {}", if l.passed { "PASS" } else { "FAIL" }, l.id, l.detail);
        failed += usize::from(!l.passed);
    }
    println!("acceptance: {} passed, {failed} failed", lines.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
