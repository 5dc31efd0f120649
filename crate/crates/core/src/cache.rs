//! On-disk cache of unit-amplitude corrector trajectories.
//!
//! The corrector problem is linear in `ε`, so one trajectory computed at
//! `ε = 1` serves every amplitude. Both cold and cached paths go through the
//! same unit solve followed by [`CorrectorTrajectory::with_epsilon`], which
//! keeps their outputs bit-identical.
//!
//! Each entry is two flat binary files named by a SHA-256 key over the
//! outflow profile, the grid, `dt`, `T` and the storage stride:
//! `<key>.gs.bin` holds the stored `G^s` profiles (`Nx = 1`) and
//! `<key>.energy.bin` the per-step energy records as frames of
//! `(t_mid; lhs, rhs, slack)` with `Nx = 3, Ny = 1`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::corrector::{solve_gs, CorrectorParams, CorrectorTrajectory, EnergyRecord};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::io::FlatFile;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheUse {
    /// No cache directory configured.
    Disabled,
    Hit,
    /// Computed and written to the cache.
    Stored,
}

#[derive(Debug, Clone)]
pub struct CorrectorCache {
    dir: PathBuf,
}

fn unit(params: &CorrectorParams) -> CorrectorParams {
    CorrectorParams {
        epsilon: 1.0,
        ..params.clone()
    }
}

impl CorrectorCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        CorrectorCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Hex SHA-256 of everything the unit trajectory depends on.
    pub fn key(grid: &Grid, params: &CorrectorParams) -> String {
        let mut h = Sha256::new();
        h.update(params.f.key().as_bytes());
        h.update(b"\0");
        h.update(grid.spec().key().as_bytes());
        h.update(b"\0");
        h.update(params.dt.to_le_bytes());
        h.update(params.t_final.to_le_bytes());
        h.update((params.stride as u64).to_le_bytes());
        hex::encode(h.finalize())
    }

    fn paths(&self, key: &str) -> (PathBuf, PathBuf) {
        (
            self.dir.join(format!("{key}.gs.bin")),
            self.dir.join(format!("{key}.energy.bin")),
        )
    }

    /// Unit-amplitude trajectory, if present.
    pub fn load(&self, grid: &Arc<Grid>, params: &CorrectorParams) -> Result<Option<CorrectorTrajectory>> {
        let (gs_path, en_path) = self.paths(&Self::key(grid, params));
        if !gs_path.exists() || !en_path.exists() {
            return Ok(None);
        }
        let gs = FlatFile::read(&gs_path)?;
        let en = FlatFile::read(&en_path)?;
        if gs.nx != 1 || gs.ny != grid.ny() || gs.ymax != grid.ymax() || en.nx != 3 || en.ny != 1 {
            return Err(Error::Format {
                path: gs_path.display().to_string(),
                detail: "cache entry does not match the requested grid".into(),
            });
        }
        let energy = en
            .frames
            .iter()
            .map(|f| EnergyRecord {
                t_mid: f.t,
                lhs: f.values[0],
                rhs: f.values[1],
                slack: f.values[2],
            })
            .collect();
        let (times, samples) = gs.frames.into_iter().map(|f| (f.t, f.values)).unzip();
        CorrectorTrajectory::from_parts(grid, unit(params), times, samples, energy).map(Some)
    }

    pub fn store(&self, traj: &CorrectorTrajectory) -> Result<()> {
        std::fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let grid = traj.grid();
        let (gs_path, en_path) = self.paths(&Self::key(grid, traj.params()));
        let mut gs = FlatFile::profiles(grid);
        for (t, g) in traj.times().iter().zip(traj.gs_samples()) {
            gs.push(*t, g.clone())?;
        }
        let mut en = FlatFile::new(3, 1, grid.length(), grid.ymax());
        for e in traj.energy_records() {
            en.push(e.t_mid, vec![e.lhs, e.rhs, e.slack])?;
        }
        gs.write(&gs_path)?;
        en.write(&en_path)
    }

    /// Delete every cache entry; returns the number of files removed.
    pub fn clear(&self) -> Result<usize> {
        let entries = match std::fs::read_dir(&self.dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(0),
            Err(e) => return Err(Error::io(&self.dir, e)),
        };
        let mut n = 0;
        for entry in entries {
            let path = entry.map_err(|e| Error::io(&self.dir, e))?.path();
            let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("");
            if name.ends_with(".gs.bin") || name.ends_with(".energy.bin") {
                std::fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
                n += 1;
            }
        }
        Ok(n)
    }
}

/// Corrector at `params.epsilon`, via the unit trajectory and `cache` when given.
pub fn corrector_for(
    grid: &Arc<Grid>,
    params: &CorrectorParams,
    cache: Option<&CorrectorCache>,
) -> Result<(Arc<CorrectorTrajectory>, CacheUse)> {
    let base = unit(params);
    let (traj, used) = match cache {
        None => (solve_gs(grid, &base)?, CacheUse::Disabled),
        Some(c) => match c.load(grid, &base)? {
            Some(t) => (t, CacheUse::Hit),
            None => {
                let t = solve_gs(grid, &base)?;
                c.store(&t)?;
                (t, CacheUse::Stored)
            }
        },
    };
    Ok((Arc::new(traj.with_epsilon(params.epsilon)), used))
}
