//! On-disk formats: the flat binary field file, the diagnostics CSV and the
//! JSON run summary.
//!
//! Flat binary layout, all values little-endian `f64`:
//!
//! ```text
//! Nx  Ny  L  Ymax                      header
//! t   v[0] .. v[Nx*Ny - 1]             one frame, repeated
//! ```
//!
//! Frame values are physical-space samples in row-major order, index
//! `i * Nx + n` for wall-normal node `i` and tangential node `n`. Profiles
//! (functions of `y` only) use `Nx = 1`. The frame count follows from the
//! file length.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::diagnostics::{theorem_monitor, DiagnosticsRecord, TheoremReport, NORM_KEYS};
use crate::error::{Error, Result};
use crate::field::Field2D;
use crate::grid::Grid;
use crate::prandtl::{InitialDataReport, RunOutcome, RunStatus};

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatFile {
    pub nx: usize,
    pub ny: usize,
    pub length: f64,
    pub ymax: f64,
    pub frames: Vec<Frame>,
}

impl FlatFile {
    pub fn new(nx: usize, ny: usize, length: f64, ymax: f64) -> Self {
        FlatFile {
            nx,
            ny,
            length,
            ymax,
            frames: Vec::new(),
        }
    }

    pub fn for_grid(grid: &Grid) -> Self {
        Self::new(grid.nx(), grid.ny(), grid.length(), grid.ymax())
    }

    /// Header for wall-normal profiles on `grid`.
    pub fn profiles(grid: &Grid) -> Self {
        Self::new(1, grid.ny(), grid.length(), grid.ymax())
    }

    pub fn push(&mut self, t: f64, values: Vec<f64>) -> Result<()> {
        if values.len() != self.nx * self.ny {
            return Err(Error::GridMismatch(format!(
                "frame has {} values, header expects {}",
                values.len(),
                self.nx * self.ny
            )));
        }
        self.frames.push(Frame { t, values });
        Ok(())
    }

    pub fn push_field(&mut self, t: f64, field: &Field2D) -> Result<()> {
        let g = field.grid();
        if g.nx() != self.nx || g.ny() != self.ny {
            return Err(Error::GridMismatch("field does not match file header".into()));
        }
        self.push(t, field.to_physical())
    }

    /// Rebuild frame `k` as a field on `grid`, which must match the header.
    pub fn field(&self, grid: &Arc<Grid>, k: usize) -> Result<Field2D> {
        if grid.nx() != self.nx || grid.ny() != self.ny {
            return Err(Error::GridMismatch("grid does not match file header".into()));
        }
        let frame = self
            .frames
            .get(k)
            .ok_or_else(|| Error::Consistency(format!("frame {k} out of range")))?;
        Field2D::from_physical(grid, &frame.values)
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        for v in [self.nx as f64, self.ny as f64, self.length, self.ymax] {
            w.write_all(&v.to_le_bytes())?;
        }
        for f in &self.frames {
            w.write_all(&f.t.to_le_bytes())?;
            for v in &f.values {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut bytes = Vec::new();
        BufReader::new(file)
            .read_to_end(&mut bytes)
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|detail| Error::Format {
            path: path.display().to_string(),
            detail,
        })
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        if bytes.len() % 8 != 0 || bytes.len() < 32 {
            return Err(format!("length {} is not a header plus whole f64 values", bytes.len()));
        }
        let vals: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let as_count = |v: f64, name: &str| {
            if v >= 1.0 && v.fract() == 0.0 && v < 1e9 {
                Ok(v as usize)
            } else {
                Err(format!("header {name} = {v} is not a positive integer"))
            }
        };
        let nx = as_count(vals[0], "Nx")?;
        let ny = as_count(vals[1], "Ny")?;
        let mut out = FlatFile::new(nx, ny, vals[2], vals[3]);
        let stride = nx * ny + 1;
        let body = &vals[4..];
        if body.len() % stride != 0 {
            return Err(format!("body of {} values is not a whole number of frames", body.len()));
        }
        for chunk in body.chunks_exact(stride) {
            out.frames.push(Frame {
                t: chunk[0],
                values: chunk[1..].to_vec(),
            });
        }
        Ok(out)
    }
}

/// CSV header: `t, theta, radius`, then [`NORM_KEYS`].
pub fn csv_header() -> Vec<&'static str> {
    let mut h = vec!["t", "theta", "radius"];
    h.extend(NORM_KEYS);
    h
}

/// Empty cells stand for undefined values (a ratio of two zero norms).
fn cell(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:e}")
    }
}

pub fn write_diagnostics_csv(w: impl Write, records: &[DiagnosticsRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let fail = |e: csv::Error| Error::Consistency(format!("csv: {e}"));
    out.write_record(csv_header()).map_err(fail)?;
    for r in records {
        let mut row = vec![cell(r.t), cell(r.theta), cell(r.radius)];
        row.extend(r.columns().iter().map(|v| cell(*v)));
        out.write_record(&row).map_err(fail)?;
    }
    out.flush().map_err(|e| Error::Consistency(format!("csv: {e}")))
}

/// Physical field as `x, y, value` rows for plotting.
pub fn write_field_csv(w: impl Write, field: &Field2D) -> Result<()> {
    let grid = field.grid();
    let vals = field.to_physical();
    let mut out = csv::Writer::from_writer(w);
    let fail = |e: csv::Error| Error::Consistency(format!("csv: {e}"));
    out.write_record(["x", "y", "value"]).map_err(fail)?;
    for i in 0..grid.ny() {
        for n in 0..grid.nx() {
            out.write_record([cell(grid.x(n)), cell(grid.y()[i]), cell(vals[i * grid.nx() + n])])
                .map_err(fail)?;
        }
    }
    out.flush().map_err(|e| Error::Consistency(format!("csv: {e}")))
}

/// Machine-readable summary of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub status: RunStatus,
    pub exit_code: i32,
    pub t_reached: f64,
    pub steps_recorded: usize,
    pub theta_final: f64,
    pub radius_final: f64,
    pub breach: bool,
    pub initial: InitialDataReport,
    pub monitor: TheoremReport,
    pub warnings: Vec<String>,
    pub config: ScenarioConfig,
}

impl RunSummary {
    pub fn new(config: &ScenarioConfig, outcome: &RunOutcome) -> Self {
        RunSummary {
            status: outcome.status.clone(),
            exit_code: outcome.status.exit_code(),
            t_reached: outcome.final_state.t,
            steps_recorded: outcome.records.len(),
            theta_final: outcome.tracker.theta(),
            radius_final: outcome.tracker.radius(),
            breach: matches!(outcome.status, RunStatus::Breach { .. }),
            initial: outcome.initial.clone(),
            monitor: theorem_monitor(&outcome.records, &outcome.tracker, &outcome.initial, config.delta),
            warnings: outcome.warnings.clone(),
            config: config.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

/// Write `diagnostics.csv`, `summary.json`, `final_state.bin` and, when
/// snapshots were taken, `snapshots.bin` into `dir`.
pub fn write_run_outputs(dir: &Path, config: &ScenarioConfig, outcome: &RunOutcome) -> Result<RunSummary> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv_path = dir.join("diagnostics.csv");
    let file = File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    write_diagnostics_csv(BufWriter::new(file), &outcome.records)?;

    let summary = RunSummary::new(config, outcome);
    let json_path = dir.join("summary.json");
    std::fs::write(&json_path, summary.to_json() + "\n").map_err(|e| Error::io(&json_path, e))?;

    let state = &outcome.final_state;
    let mut fin = FlatFile::for_grid(state.u.grid());
    fin.push_field(state.t, &state.u)?;
    fin.write(&dir.join("final_state.bin"))?;

    if !outcome.snapshots.is_empty() {
        let mut snaps = FlatFile::for_grid(state.u.grid());
        for s in &outcome.snapshots {
            snaps.push_field(s.t, &s.u)?;
        }
        snaps.write(&dir.join("snapshots.bin"))?;
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Exec;
    use crate::grid::GridSpec;

    #[test]
    fn flat_file_round_trip() {
        let g = Grid::new(GridSpec::uniform(8, 3.0, 11, 5.0), Exec::Sequential).unwrap();
        let f = Field2D::from_fn(&g, |x, y| (2.0 * std::f64::consts::PI * x / 3.0).cos() * (-y).exp() * y);
        let mut file = FlatFile::for_grid(&g);
        file.push_field(0.5, &f).unwrap();
        file.push_field(1.5, &f.scaled(2.0)).unwrap();
        let mut bytes = Vec::new();
        file.write_to(&mut bytes).unwrap();
        assert_eq!(bytes.len(), 8 * (4 + 2 * (1 + 88)));
        assert_eq!(&bytes[..8], &8.0f64.to_le_bytes());
        assert_eq!(&bytes[16..24], &3.0f64.to_le_bytes());
        let back = FlatFile::from_bytes(&bytes).unwrap();
        assert_eq!(back, file);
        let f1 = back.field(&g, 1).unwrap();
        assert!(f1.sub(&f.scaled(2.0)).unwrap().max_abs_physical() < 1e-14);
        assert!(FlatFile::from_bytes(&bytes[..bytes.len() - 8]).is_err());
    }

    #[test]
    fn csv_blank_for_undefined() {
        assert_eq!(cell(f64::NAN), "");
        assert_eq!(cell(0.0), "0e0");
        assert_eq!(csv_header().len(), 3 + NORM_KEYS.len());
    }
}
