//! Field storage on the discrete half-plane.
//!
//! [`Field2D`] stores tangential Fourier coefficients mode-major
//! (`coef[j * ny + i]` is mode `j` at node `y_i`), normalized so that the
//! physical value is `sum_j coef_j e^{i xi_j x}`. [`VProfile`] is a function
//! of `y` alone.

use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, Scalar};

/// Guard for the Gaussian weight: larger values are clamped and flagged.
pub const WEIGHT_CAP: f64 = 1e300;

#[derive(Debug, Clone)]
pub struct VProfile {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl VProfile {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        VProfile {
            grid: grid.clone(),
            values: vec![0.0; grid.ny()],
        }
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        VProfile {
            grid: grid.clone(),
            values: grid.y().iter().map(|&y| f(y)).collect(),
        }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.ny() {
            return Err(Error::GridMismatch(format!(
                "profile has {} values, grid has {} nodes",
                values.len(),
                grid.ny()
            )));
        }
        Ok(VProfile {
            grid: grid.clone(),
            values,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn top(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn ddy(&self) -> VProfile {
        let mut out = vec![0.0; self.values.len()];
        self.grid.ddy_slice(&self.values, &mut out);
        VProfile {
            grid: self.grid.clone(),
            values: out,
        }
    }

    /// `∫_y^Ymax a dy'`, zero at the top node.
    pub fn int_y_to_inf(&self) -> VProfile {
        let mut out = vec![0.0; self.values.len()];
        self.grid.cumulative_from_top(&self.values, &mut out);
        VProfile {
            grid: self.grid.clone(),
            values: out,
        }
    }

    /// `∫_0^y a dy'`.
    pub fn int_y_from_wall(&self) -> VProfile {
        let mut out = vec![0.0; self.values.len()];
        self.grid.cumulative_from_wall(&self.values, &mut out);
        VProfile {
            grid: self.grid.clone(),
            values: out,
        }
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn scaled(&self, c: f64) -> VProfile {
        self.map(|_, v| c * v)
    }

    /// Node-wise `f(y, value)`.
    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> VProfile {
        VProfile {
            grid: self.grid.clone(),
            values: self
                .grid
                .y()
                .iter()
                .zip(&self.values)
                .map(|(&y, &v)| f(y, v))
                .collect(),
        }
    }

    pub fn zip_with(&self, other: &VProfile, f: impl Fn(f64, f64) -> f64) -> Result<VProfile> {
        self.grid.check_same(&other.grid)?;
        Ok(VProfile {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone)]
pub struct Field2D {
    grid: Arc<Grid>,
    coef: Vec<Complex64>,
}

impl Field2D {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Field2D {
            grid: grid.clone(),
            coef: vec![Complex64::new(0.0, 0.0); grid.nx() * grid.ny()],
        }
    }

    pub fn from_coefficients(grid: &Arc<Grid>, coef: Vec<Complex64>) -> Result<Self> {
        if coef.len() != grid.nx() * grid.ny() {
            return Err(Error::GridMismatch(format!(
                "{} coefficients for a {}x{} grid",
                coef.len(),
                grid.nx(),
                grid.ny()
            )));
        }
        Ok(Field2D {
            grid: grid.clone(),
            coef,
        })
    }

    /// Sample `f(x, y)` on the physical grid and transform.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        let nx = grid.nx();
        let mut vals = vec![0.0; nx * grid.ny()];
        let y = grid.y();
        grid.exec().for_each_chunk_mut(&mut vals, nx, |i, row| {
            for (n, v) in row.iter_mut().enumerate() {
                *v = f(grid.x(n), y[i]);
            }
        });
        Self::from_physical(grid, &vals).expect("sized by construction")
    }

    /// Separable field `profile(y) * (c cos(k x) + s sin(k x))` for an integer
    /// multiple `k` of the fundamental wavenumber.
    pub fn single_mode(grid: &Arc<Grid>, k: usize, c: f64, s: f64, profile: &VProfile) -> Self {
        let mut out = Field2D::zeros(grid);
        let ny = grid.ny();
        let nx = grid.nx();
        let amp = Complex64::new(0.5 * c, -0.5 * s);
        if k == 0 {
            for i in 0..ny {
                out.coef[i] = Complex64::new(c * profile.values[i], 0.0);
            }
            return out;
        }
        assert!(k < nx / 2, "mode {k} is not resolved");
        for i in 0..ny {
            out.coef[k * ny + i] = amp * profile.values[i];
            out.coef[(nx - k) * ny + i] = amp.conj() * profile.values[i];
        }
        out
    }

    /// Build from physical values laid out `vals[i * nx + n]`.
    pub fn from_physical(grid: &Arc<Grid>, vals: &[f64]) -> Result<Self> {
        let (nx, ny) = (grid.nx(), grid.ny());
        if vals.len() != nx * ny {
            return Err(Error::GridMismatch("physical array size".into()));
        }
        let mut rows = vec![Complex64::new(0.0, 0.0); nx * ny];
        let scale = 1.0 / nx as f64;
        grid.exec().for_each_chunk_mut(&mut rows, nx, |i, row| {
            for (r, &v) in row.iter_mut().zip(&vals[i * nx..(i + 1) * nx]) {
                *r = Complex64::new(v, 0.0);
            }
            grid.fft_forward().process(row);
            for r in row.iter_mut() {
                *r *= scale;
            }
        });
        let mut coef = vec![Complex64::new(0.0, 0.0); nx * ny];
        grid.exec().for_each_chunk_mut(&mut coef, ny, |j, col| {
            for (i, c) in col.iter_mut().enumerate() {
                *c = rows[i * nx + j];
            }
        });
        Ok(Field2D {
            grid: grid.clone(),
            coef,
        })
    }

    /// Physical values laid out `vals[i * nx + n]`.
    pub fn to_physical(&self) -> Vec<f64> {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let mut vals = vec![0.0; nx * ny];
        let grid = &self.grid;
        let coef = &self.coef;
        grid.exec().for_each_chunk_mut(&mut vals, nx, |i, row| {
            let mut buf: Vec<Complex64> = (0..nx).map(|j| coef[j * ny + i]).collect();
            grid.fft_inverse().process(&mut buf);
            for (v, b) in row.iter_mut().zip(&buf) {
                *v = b.re;
            }
        });
        vals
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coef
    }
    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coef
    }
    pub fn mode(&self, j: usize) -> &[Complex64] {
        let ny = self.grid.ny();
        &self.coef[j * ny..(j + 1) * ny]
    }
    pub fn mode_mut(&mut self, j: usize) -> &mut [Complex64] {
        let ny = self.grid.ny();
        &mut self.coef[j * ny..(j + 1) * ny]
    }

    /// Apply `f(j, input_column, output_column)` to every mode.
    pub fn map_modes(&self, f: impl Fn(usize, &[Complex64], &mut [Complex64]) + Sync) -> Field2D {
        let ny = self.grid.ny();
        let mut out = vec![Complex64::new(0.0, 0.0); self.coef.len()];
        let coef = &self.coef;
        self.grid.exec().for_each_chunk_mut(&mut out, ny, |j, col| {
            f(j, &coef[j * ny..(j + 1) * ny], col)
        });
        Field2D {
            grid: self.grid.clone(),
            coef: out,
        }
    }

    /// Multiply each mode by a scalar symbol `m(j)`.
    pub fn apply_symbol(&self, m: impl Fn(usize) -> Complex64 + Sync) -> Field2D {
        self.map_modes(|j, a, out| {
            let s = m(j);
            for (o, &v) in out.iter_mut().zip(a) {
                *o = v * s;
            }
        })
    }

    pub fn ddx(&self) -> Field2D {
        let xi = self.grid.wavenumbers();
        let nyq = self.grid.nyquist();
        self.apply_symbol(|j| {
            if Some(j) == nyq {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, xi[j])
            }
        })
    }

    pub fn ddy(&self) -> Field2D {
        let grid = self.grid.clone();
        self.map_modes(|_, a, out| grid.ddy_slice(a, out))
    }

    /// `∫_y^Ymax a dy'` per mode.
    pub fn int_y_to_inf(&self) -> Field2D {
        let grid = self.grid.clone();
        self.map_modes(|_, a, out| grid.cumulative_from_top(a, out))
    }

    /// `∫_0^y a dy'` per mode.
    pub fn int_y_from_wall(&self) -> Field2D {
        let grid = self.grid.clone();
        self.map_modes(|_, a, out| grid.cumulative_from_wall(a, out))
    }

    /// Node-wise multiplication by a profile.
    pub fn mul_profile(&self, w: &VProfile) -> Result<Field2D> {
        self.grid.check_same(&w.grid)?;
        let wv = &w.values;
        Ok(self.map_modes(|_, a, out| {
            for ((o, &v), &s) in out.iter_mut().zip(a).zip(wv) {
                *o = v * s;
            }
        }))
    }

    pub fn scaled(&self, c: f64) -> Field2D {
        Field2D {
            grid: self.grid.clone(),
            coef: self.coef.iter().map(|v| v * c).collect(),
        }
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &Field2D) -> Result<Field2D> {
        self.grid.check_same(&other.grid)?;
        Ok(Field2D {
            grid: self.grid.clone(),
            coef: self
                .coef
                .iter()
                .zip(&other.coef)
                .map(|(a, b)| a + b * c)
                .collect(),
        })
    }

    pub fn add(&self, other: &Field2D) -> Result<Field2D> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Field2D) -> Result<Field2D> {
        self.axpy(-1.0, other)
    }

    /// Pointwise product computed in physical space. With `dealias` the
    /// result keeps only `|j| <= nx / 3`.
    pub fn product(&self, other: &Field2D, dealias: bool) -> Result<Field2D> {
        self.grid.check_same(&other.grid)?;
        let a = self.to_physical();
        let b = other.to_physical();
        let p: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        let mut out = Field2D::from_physical(&self.grid, &p)?;
        if dealias {
            out.truncate_two_thirds();
        }
        Ok(out)
    }

    /// Zero all modes with `|j| > nx / 3`.
    pub fn truncate_two_thirds(&mut self) {
        let nx = self.grid.nx();
        let ny = self.grid.ny();
        let keep = nx / 3;
        for j in 0..nx {
            let signed = if j <= nx / 2 { j } else { nx - j };
            if signed > keep {
                self.coef[j * ny..(j + 1) * ny].fill(Complex64::new(0.0, 0.0));
            }
        }
    }

    pub fn zero_nyquist(&mut self) {
        if let Some(j) = self.grid.nyquist() {
            self.mode_mut(j).fill(Complex64::new(0.0, 0.0));
        }
    }

    /// Per-mode weighted energies `E_j = ∫ w^2 |a_j|^2 dy` (unweighted when `w` is `None`).
    pub fn mode_energies(&self, w: Option<&VProfile>) -> Vec<f64> {
        let ny = self.grid.ny();
        let q = self.grid.quad_weights();
        self.grid.exec().map(self.grid.nx(), |j| {
            let col = &self.coef[j * ny..(j + 1) * ny];
            match w {
                Some(w) => col
                    .iter()
                    .zip(&w.values)
                    .zip(q)
                    .map(|((a, s), qi)| (a * s).norm_sqr() * qi)
                    .sum(),
                None => col.iter().zip(q).map(|(a, qi)| a.norm_sqr() * qi).sum(),
            }
        })
    }

    /// `‖a‖_{L^2}` over one period in x and `[0, Ymax]` in y.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.length() * self.mode_energies(None).iter().sum::<f64>()).sqrt()
    }

    /// `∫_0^Ymax a_j dy` for every mode.
    pub fn y_integrals(&self) -> Vec<Complex64> {
        let ny = self.grid.ny();
        (0..self.grid.nx())
            .map(|j| self.grid.integrate(&self.coef[j * ny..(j + 1) * ny]))
            .collect()
    }

    /// Largest coefficient magnitude at `y = 0`.
    pub fn wall_residual(&self) -> f64 {
        let ny = self.grid.ny();
        (0..self.grid.nx())
            .map(|j| self.coef[j * ny].norm())
            .fold(0.0, f64::max)
    }

    /// Largest coefficient magnitude at `y = Ymax`.
    pub fn top_residual(&self) -> f64 {
        let ny = self.grid.ny();
        (0..self.grid.nx())
            .map(|j| self.coef[j * ny + ny - 1].norm())
            .fold(0.0, f64::max)
    }

    /// Largest magnitude in the x-mean mode.
    pub fn mean_mode_max(&self) -> f64 {
        self.mode(0).iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Largest deviation from Hermitian symmetry `a_{-j} = conj(a_j)`.
    pub fn hermitian_defect(&self) -> f64 {
        let nx = self.grid.nx();
        let ny = self.grid.ny();
        let mut worst: f64 = 0.0;
        for j in 0..nx {
            let m = (nx - j) % nx;
            for i in 0..ny {
                worst = worst.max((self.coef[j * ny + i] - self.coef[m * ny + i].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs_physical(&self) -> f64 {
        self.to_physical().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.coef.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.coef.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }
}

/// Gaussian weight `e^{gamma y^2 / (8 (1 + t))}` together with a flag set when
/// any node hit [`WEIGHT_CAP`].
#[derive(Debug, Clone)]
pub struct GaussianWeight {
    pub profile: VProfile,
    pub capped: bool,
}

pub fn gaussian_weight(grid: &Arc<Grid>, t: f64, gamma: f64) -> Result<GaussianWeight> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::config("gamma", "must lie in (0, 1]"));
    }
    if !(t >= 0.0) {
        return Err(Error::config("t", "must be nonnegative"));
    }
    Ok(gaussian_weight_unchecked(grid, t, gamma))
}

pub(crate) fn gaussian_weight_unchecked(grid: &Arc<Grid>, t: f64, gamma: f64) -> GaussianWeight {
    let profile = VProfile::from_fn(grid, |y| {
        (gamma * y * y / (8.0 * (1.0 + t))).exp().min(WEIGHT_CAP)
    });
    let capped = profile.values.iter().any(|&v| v >= WEIGHT_CAP);
    GaussianWeight { profile, capped }
}

/// Objects with a y-direction: profiles and fields.
pub trait YField: Sized {
    fn grid_ref(&self) -> &Arc<Grid>;
    fn ddy(&self) -> Self;
    fn int_y_to_inf(&self) -> Self;
    /// `∫ |w a|^2` over the domain (x-period times `[0, Ymax]` for fields).
    fn weighted_sq(&self, w: &VProfile) -> f64;
}

impl YField for VProfile {
    fn grid_ref(&self) -> &Arc<Grid> {
        &self.grid
    }
    fn ddy(&self) -> Self {
        VProfile::ddy(self)
    }
    fn int_y_to_inf(&self) -> Self {
        VProfile::int_y_to_inf(self)
    }
    fn weighted_sq(&self, w: &VProfile) -> f64 {
        let q = self.grid.quad_weights();
        self.values
            .iter()
            .zip(&w.values)
            .zip(q)
            .map(|((a, s), qi)| (a * s).abs_sq() * qi)
            .sum()
    }
}

impl YField for Field2D {
    fn grid_ref(&self) -> &Arc<Grid> {
        &self.grid
    }
    fn ddy(&self) -> Self {
        Field2D::ddy(self)
    }
    fn int_y_to_inf(&self) -> Self {
        Field2D::int_y_to_inf(self)
    }
    fn weighted_sq(&self, w: &VProfile) -> f64 {
        self.grid.length() * self.mode_energies(Some(w)).iter().sum::<f64>()
    }
}

pub fn ddx(a: &Field2D) -> Field2D {
    a.ddx()
}

pub fn ddy<A: YField>(a: &A) -> A {
    a.ddy()
}

pub fn int_y_to_inf<A: YField>(a: &A) -> A {
    a.int_y_to_inf()
}

/// `‖w a‖_{L^2}`.
pub fn weighted_l2<A: YField>(a: &A, w: &VProfile) -> Result<f64> {
    a.grid_ref().check_same(&w.grid)?;
    Ok(a.weighted_sq(w).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrevesReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Both sides of `∫ |∂_y a|^2 e^{2 Psi} >= 1/(2<t>) ∫ |a|^2 e^{2 Psi}`.
pub fn treves_check<A: YField>(a: &A, t: f64) -> Result<TrevesReport> {
    let w = gaussian_weight(a.grid_ref(), t, 1.0)?.profile;
    let lhs = a.ddy().weighted_sq(&w);
    let rhs = a.weighted_sq(&w) / (2.0 * (1.0 + t));
    let ratio = if rhs == 0.0 { f64::INFINITY } else { lhs / rhs };
    Ok(TrevesReport { lhs, rhs, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Exec;
    use crate::grid::GridSpec;
    use std::f64::consts::PI;

    fn grid(nx: usize, ny: usize, ymax: f64) -> Arc<Grid> {
        Grid::new(GridSpec::uniform(nx, 2.0 * PI, ny, ymax), Exec::Parallel).unwrap()
    }

    #[test]
    fn physical_round_trip() {
        let g = grid(16, 21, 4.0);
        let f = Field2D::from_fn(&g, |x, y| (3.0 * x).sin() * y + (x).cos() * y * y);
        let back = Field2D::from_physical(&g, &f.to_physical()).unwrap();
        for (a, b) in f.coefficients().iter().zip(back.coefficients()) {
            assert!((a - b).norm() < 1e-14);
        }
        assert!(f.hermitian_defect() < 1e-15);
    }

    #[test]
    fn ddx_of_cosine() {
        let g = grid(32, 9, 1.0);
        let f = Field2D::from_fn(&g, |x, _| (2.0 * x).cos());
        let d = f.ddx().to_physical();
        for i in 0..g.ny() {
            for n in 0..g.nx() {
                let x = g.x(n);
                assert!((d[i * g.nx() + n] + 2.0 * (2.0 * x).sin()).abs() < 1e-12);
            }
        }
        let dd = f.ddx().ddx();
        let expect = f.scaled(-4.0);
        assert!(dd.sub(&expect).unwrap().l2_norm() < 1e-12);
    }

    #[test]
    fn ddy_gaussian_fourth_order() {
        let g = grid(8, 241, 12.0);
        let p = VProfile::from_fn(&g, |y| (-y * y / 4.0).exp());
        let d = p.ddy();
        let err = g
            .y()
            .iter()
            .zip(d.values())
            .map(|(y, v)| (v + 0.5 * y * (-y * y / 4.0).exp()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
        let quad = VProfile::from_fn(&g, |y| 0.5 * y * y).ddy();
        for (y, v) in g.y().iter().zip(quad.values()) {
            assert!((v - y).abs() < 1e-10);
        }
    }

    #[test]
    fn tail_integral_of_derivative() {
        let g = grid(8, 241, 12.0);
        let p = VProfile::from_fn(&g, |y| -0.5 * y * (-y * y / 4.0).exp());
        let t = p.int_y_to_inf();
        let top = (-36.0f64).exp();
        for (y, v) in g.y().iter().zip(t.values()) {
            let e = (v - (top - (-y * y / 4.0).exp())).abs();
            assert!(e < 1e-8, "{y} {e}");
        }
        assert_eq!(t.top(), 0.0);
    }

    #[test]
    fn weight_values() {
        let g = grid(8, 201, 10.0);
        let w = gaussian_weight(&g, 0.0, 1.0).unwrap();
        assert!(!w.capped);
        assert_eq!(w.profile.values()[0], 1.0);
        assert!((w.profile.values()[40] - 0.5f64.exp()).abs() < 1e-14);
        assert!(gaussian_weight(&g, 0.0, 0.0).is_err());
        assert!(gaussian_weight(&g, 0.0, 1.5).is_err());
    }

    #[test]
    fn treves_gaussian_equality() {
        let g = grid(8, 801, 40.0);
        let p = VProfile::from_fn(&g, |y| (-y * y / 4.0).exp());
        let r = treves_check(&p, 0.0).unwrap();
        let half_sqrt_pi = PI.sqrt() / 2.0;
        assert!((r.lhs - half_sqrt_pi).abs() < 1e-8);
        assert!((r.rhs - half_sqrt_pi).abs() < 1e-8);
        assert!((r.ratio - 1.0).abs() < 1e-6);
        let zero = VProfile::zeros(&g);
        assert_eq!(treves_check(&zero, 0.0).unwrap().ratio, f64::INFINITY);
    }

    #[test]
    fn parseval_matches_physical_quadrature() {
        let g = grid(16, 121, 6.0);
        let f = Field2D::from_fn(&g, |x, y| ((x).sin() + 0.3 * (2.0 * x).cos() + 0.1) * (-y * y).exp());
        let phys = f.to_physical();
        let nx = g.nx();
        let q = g.quad_weights();
        let mut direct = 0.0;
        for i in 0..g.ny() {
            for n in 0..nx {
                direct += phys[i * nx + n].powi(2) * q[i] * g.dx();
            }
        }
        let w = VProfile::from_fn(&g, |_| 1.0);
        let spectral = weighted_l2(&f, &w).unwrap();
        assert!((spectral * spectral - direct).abs() < 1e-10 * direct);
    }
}
