//! `prandtl`: run scenarios, verify the numerical building blocks, list
//! presets and manage the corrector cache.
//!
//! Exit codes: 0 ok, 1 i/o or failed verification, 2 analytic-strip breach,
//! 3 CFL violation, 4 numeric fault, 5 configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use prandtl_core::cache::{corrector_for, CacheUse, CorrectorCache};
use prandtl_core::config::{parse_config, Preset};
use prandtl_core::io::write_run_outputs;
use prandtl_core::prandtl::{build_grid, run_with_corrector};
use prandtl_core::verify::{run_suite, Suite};
use prandtl_core::Error;

const DEFAULT_CACHE: &str = ".prandtl-cache";

#[derive(Parser)]
#[command(name = "prandtl", version, about = "Prandtl boundary-layer simulator with analytic-radius diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write diagnostics.csv, summary.json and final_state.bin.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an oracle suite: treves, lp, heat, g0, corrector or all.
    Verify {
        suite: String,
        /// Print the report as JSON instead of one line per check.
        #[arg(long)]
        json: bool,
    },
    /// Inspect the built-in scenario presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
    /// Manage cached corrector trajectories.
    CorrectorCache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    /// Print a preset as a config file.
    Show { name: String },
}

#[derive(Subcommand)]
enum CacheAction {
    /// Compute and store the corrector for a scenario.
    Build {
        config: PathBuf,
        /// Cache directory; defaults to the config's cache_dir, then .prandtl-cache.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Delete every cached trajectory in the directory.
    Clear {
        #[arg(long, default_value = DEFAULT_CACHE)]
        dir: PathBuf,
    },
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::InitialData { .. } => 5,
        Error::Cfl { .. } => 3,
        Error::NumericFault { .. } | Error::SingularPivot { .. } => 4,
        _ => 1,
    }
}

fn run(config: &Path, out: &Path) -> Result<u8, Error> {
    let cfg = parse_config(config)?;
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }
    let grid = build_grid(&cfg)?;
    let cache = (!cfg.cache_dir.is_empty()).then(|| CorrectorCache::new(&cfg.cache_dir));
    let (corrector, used) = corrector_for(&grid, &cfg.corrector_params()?, cache.as_ref())?;
    if used == CacheUse::Hit {
        eprintln!("corrector: cache hit");
    }
    let outcome = run_with_corrector(&cfg, &grid, corrector, &mut ())?;
    let summary = write_run_outputs(out, &cfg, &outcome)?;
    println!(
        "{}: t = {:.4}, theta = {:.6e}, radius = {:.6}, {} records",
        serde_json::to_value(&summary.status)
            .ok()
            .and_then(|v| v.get("status").and_then(|s| s.as_str().map(String::from)))
            .unwrap_or_default(),
        summary.t_reached,
        summary.theta_final,
        summary.radius_final,
        summary.steps_recorded
    );
    Ok(summary.exit_code as u8)
}

fn verify(name: &str, json: bool) -> Result<u8, Error> {
    let suite: Suite = name.parse()?;
    let report = run_suite(suite)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        for c in &report.checks {
            println!("{c}");
        }
    }
    Ok(if report.passed() { 0 } else { 1 })
}

fn cache_build(config: &Path, dir: Option<PathBuf>) -> Result<u8, Error> {
    let cfg = parse_config(config)?;
    let dir = dir
        .or_else(|| (!cfg.cache_dir.is_empty()).then(|| PathBuf::from(&cfg.cache_dir)))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE));
    let grid = build_grid(&cfg)?;
    let cache = CorrectorCache::new(&dir);
    let params = cfg.corrector_params()?;
    let (_, used) = corrector_for(&grid, &params, Some(&cache))?;
    let state = if used == CacheUse::Hit { "present" } else { "built" };
    println!("{state}: {}/{}", dir.display(), CorrectorCache::key(&grid, &params));
    Ok(0)
}

fn dispatch(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Run { config, out } => run(&config, &out),
        Command::Verify { suite, json } => verify(&suite, json),
        Command::Presets { action: PresetAction::List } => {
            for p in Preset::all() {
                println!("{:<16} {}", p.name, p.purpose);
            }
            Ok(0)
        }
        Command::Presets {
            action: PresetAction::Show { name },
        } => {
            print!("{}", Preset::find(&name)?.config.to_toml_string());
            Ok(0)
        }
        Command::CorrectorCache {
            action: CacheAction::Build { config, dir },
        } => cache_build(&config, dir),
        Command::CorrectorCache {
            action: CacheAction::Clear { dir },
        } => {
            let n = CorrectorCache::new(&dir).clear()?;
            println!("removed {n} files from {}", dir.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_code(&e))
        }
    }
}
