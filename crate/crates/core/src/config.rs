//! Scenario configuration: a flat TOML table with every key optional.
//!
//! ```toml
//! preset = "smalldata-decay"   # optional starting point, later keys override it
//! nx = 64
//! length = 6.283185307179586
//! ny = 300
//! ymax = 24.0
//! stretch = 0.0                # tanh stretching parameter, 0 for uniform
//! dt = 2e-3
//! t_final = 100.0
//! eta = 1e-3
//! k0 = 1
//! epsilon = 1e-3
//! delta = 0.2
//! lambda = 4.0
//! f = "t-exp"                  # "zero", "t-exp" or "tabulated"
//! f_rate = 1.0
//! output_every = 10
//! ```
//!
//! See [`ScenarioConfig`] for the remaining keys.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corrector::{CorrectorParams, OutflowProfile};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, Spacing};

fn default_length() -> f64 {
    2.0 * std::f64::consts::PI
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub nx: usize,
    #[serde(default = "default_length")]
    pub length: f64,
    pub ny: usize,
    pub ymax: f64,
    /// tanh stretching parameter; 0 selects a uniform grid.
    pub stretch: f64,
    pub dt: f64,
    pub t_final: f64,
    /// Initial amplitude of `eta sin(k0 x) y (1 - y^2/4) e^{-y^2/4}`.
    pub eta: f64,
    pub k0: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub lambda: f64,
    /// Outflow profile kind: "zero", "t-exp" or "tabulated".
    pub f: String,
    pub f_rate: f64,
    pub f_times: Vec<f64>,
    pub f_values: Vec<f64>,
    /// Diagnostics cadence in steps; also the corrector storage stride.
    pub output_every: usize,
    /// Snapshot cadence in steps; 0 writes the final state only.
    pub snapshot_every: usize,
    pub cfl_limit: f64,
    /// Relative tolerance for the wall and zero-integral constraints.
    pub constraint_tol: f64,
    /// Relative tolerance for the weighted tail at `Ymax`.
    pub tail_tol: f64,
    /// Stop the run when the tail tolerance is exceeded (otherwise flag only).
    pub abort_on_truncation: bool,
    pub parallel: bool,
    /// Directory for cached corrector trajectories; empty disables caching.
    pub cache_dir: String,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            nx: 64,
            length: default_length(),
            ny: 300,
            ymax: 24.0,
            stretch: 0.0,
            dt: 2e-3,
            t_final: 100.0,
            eta: 1e-3,
            k0: 1,
            epsilon: 1e-3,
            delta: 0.2,
            lambda: 4.0,
            f: "t-exp".into(),
            f_rate: 1.0,
            f_times: Vec::new(),
            f_values: Vec::new(),
            output_every: 10,
            snapshot_every: 0,
            cfl_limit: 0.5,
            constraint_tol: 1e-8,
            tail_tol: 1e-8,
            abort_on_truncation: false,
            parallel: true,
            cache_dir: String::new(),
        }
    }
}

impl ScenarioConfig {
    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            nx: self.nx,
            length: self.length,
            ny: self.ny,
            ymax: self.ymax,
            spacing: if self.stretch > 0.0 {
                Spacing::Tanh { beta: self.stretch }
            } else {
                Spacing::Uniform
            },
        }
    }

    pub fn outflow(&self) -> Result<OutflowProfile> {
        match self.f.as_str() {
            "zero" => Ok(OutflowProfile::Zero),
            "t-exp" => Ok(OutflowProfile::TExp { rate: self.f_rate }),
            "tabulated" => Ok(OutflowProfile::Tabulated {
                times: self.f_times.clone(),
                values: self.f_values.clone(),
            }),
            other => Err(Error::config(
                "f",
                format!("unknown profile `{other}` (expected zero, t-exp or tabulated)"),
            )),
        }
    }

    pub fn corrector_params(&self) -> Result<CorrectorParams> {
        Ok(CorrectorParams {
            f: self.outflow()?,
            epsilon: self.epsilon,
            t_final: self.t_final,
            dt: self.dt,
            stride: self.output_every,
        })
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        self.grid_spec().validate()?;
        if self.stretch < 0.0 || !self.stretch.is_finite() {
            return Err(Error::config("stretch", "must be nonnegative"));
        }
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(key, "must be positive"))
            }
        };
        let nonneg = |key: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(key, "must be nonnegative"))
            }
        };
        positive("dt", self.dt)?;
        positive("t_final", self.t_final)?;
        if self.t_final < self.dt {
            return Err(Error::config("t_final", "must be at least one step"));
        }
        nonneg("eta", self.eta)?;
        nonneg("epsilon", self.epsilon)?;
        positive("delta", self.delta)?;
        if !(self.lambda >= 1.0 && self.lambda.is_finite()) {
            return Err(Error::config("lambda", "must be at least 1"));
        }
        if self.k0 == 0 || 3 * self.k0 > self.nx {
            return Err(Error::config("k0", "must satisfy 1 <= k0 <= nx / 3"));
        }
        if self.output_every == 0 {
            return Err(Error::config("output_every", "must be at least 1"));
        }
        positive("cfl_limit", self.cfl_limit)?;
        positive("constraint_tol", self.constraint_tol)?;
        positive("tail_tol", self.tail_tol)?;
        self.outflow()?.validate()?;
        Ok(())
    }

    /// Warnings that do not block a run.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        let need = 4.0 * (8.0 * (1.0 + self.t_final)).sqrt();
        if self.ymax < need {
            w.push(format!(
                "ymax = {} is below 4 sqrt(8 (1 + t_final)) = {need:.2}; the weighted tail is not resolved to the end of the run",
                self.ymax
            ));
        }
        w
    }

    /// Parse a TOML document; a `preset` key selects the base configuration.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<file>", e.message().to_string()))?;
        let base = match table.remove("preset") {
            Some(toml::Value::String(name)) => Preset::find(&name)?.config,
            Some(_) => return Err(Error::config("preset", "must be a string")),
            None => ScenarioConfig::default(),
        };
        let mut merged = toml::Table::try_from(&base).expect("config serializes");
        for (k, v) in table {
            // integer literals are accepted where floats are expected
            let v = match (merged.get(&k), v) {
                (Some(toml::Value::Float(_)), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
                (_, v) => v,
            };
            merged.insert(k, v);
        }
        let cfg: ScenarioConfig = merged.try_into().map_err(|e: toml::de::Error| {
            let msg = e.message().to_string();
            let key = msg
                .split('`')
                .nth(1)
                .unwrap_or("<file>")
                .to_string();
            Error::config(key, msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

pub fn parse_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ScenarioConfig::from_toml_str(&text)
}

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub purpose: &'static str,
    pub config: ScenarioConfig,
}

impl Preset {
    pub fn all() -> Vec<Preset> {
        let base = ScenarioConfig::default();
        vec![
            Preset {
                name: "zero-data",
                purpose: "null solution: zero initial data and zero outflow stay zero",
                config: ScenarioConfig {
                    nx: 16,
                    ny: 120,
                    ymax: 24.0,
                    dt: 1e-2,
                    t_final: 1.0,
                    eta: 0.0,
                    epsilon: 0.0,
                    f: "zero".into(),
                    ..base.clone()
                },
            },
            Preset {
                name: "smalldata-decay",
                purpose: "small analytic data and outflow: global run, radius stays above delta/2, weighted norms decay",
                config: base.clone(),
            },
            Preset {
                name: "large-eta",
                purpose: "order-one data: the analytic strip is expected to close before t_final",
                config: ScenarioConfig {
                    eta: 1.0,
                    t_final: 20.0,
                    ..base.clone()
                },
            },
            Preset {
                name: "corrector-only",
                purpose: "zero data with outflow: isolates the corrector and its decay",
                config: ScenarioConfig {
                    nx: 16,
                    ny: 400,
                    dt: 1e-2,
                    t_final: 200.0,
                    eta: 0.0,
                    ..base
                },
            },
        ]
    }

    pub fn find(name: &str) -> Result<Preset> {
        Self::all()
            .into_iter()
            .find(|p| p.name == name)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::all().iter().map(|p| p.name).collect();
                Error::config("preset", format!("unknown preset `{name}` (known: {})", names.join(", ")))
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_takes_defaults() {
        let c = ScenarioConfig::from_toml_str("eta = 2e-3\nepsilon = 5e-4\n").unwrap();
        assert_eq!(c.eta, 2e-3);
        assert_eq!(c.epsilon, 5e-4);
        assert_eq!(c.nx, 64);
        assert_eq!(c.delta, 0.2);
        let echo = ScenarioConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(echo, c);
    }

    #[test]
    fn rejects_bad_values_by_name() {
        match ScenarioConfig::from_toml_str("delta = -0.1") {
            Err(Error::Config { key, .. }) => assert_eq!(key, "delta"),
            other => panic!("{other:?}"),
        }
        match ScenarioConfig::from_toml_str("gamma = 1") {
            Err(Error::Config { key, .. }) => assert_eq!(key, "gamma"),
            other => panic!("{other:?}"),
        }
        assert!(ScenarioConfig::from_toml_str("lambda = 0.5").is_err());
        assert!(ScenarioConfig::from_toml_str("nx = 60").is_err());
        assert!(ScenarioConfig::from_toml_str("f = \"sawtooth\"").is_err());
    }

    #[test]
    fn preset_reference_resolves() {
        let c = ScenarioConfig::from_toml_str("preset = \"smalldata-decay\"").unwrap();
        assert_eq!(c, Preset::find("smalldata-decay").unwrap().config);
        let c = ScenarioConfig::from_toml_str("preset = \"large-eta\"\nt_final = 5").unwrap();
        assert_eq!(c.eta, 1.0);
        assert_eq!(c.t_final, 5.0);
        assert!(ScenarioConfig::from_toml_str("preset = \"nope\"").is_err());
    }

    #[test]
    fn presets_validate() {
        for p in Preset::all() {
            p.config.validate().unwrap();
        }
        assert!(!Preset::find("smalldata-decay").unwrap().config.warnings().is_empty());
    }
}
