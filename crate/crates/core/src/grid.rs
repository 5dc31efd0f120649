//! Discretization of the half-plane: a torus of length `L` in x (Fourier
//! modes) times a node set on `[0, Ymax]` in y, with the quadrature and
//! finite-difference machinery shared by every operator in the crate.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::quadrature::{fornberg, lagrange_basis, GL6_NODES, GL6_WEIGHTS};

/// Width of the Lagrange stencil used by the interval quadrature.
const INTERVAL_POINTS: usize = 6;
/// Width of the first-derivative stencil.
const D1_POINTS: usize = 5;

/// Scalars a y-profile can carry: real profiles and complex Fourier columns.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn abs_sq(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn abs_sq(self) -> f64 {
        self * self
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn abs_sq(self) -> f64 {
        self.norm_sqr()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Spacing {
    Uniform,
    /// `y(s) = Ymax (1 - tanh(beta (1 - s)) / tanh(beta))`, clustering nodes near the wall.
    Tanh { beta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub length: f64,
    pub ny: usize,
    pub ymax: f64,
    pub spacing: Spacing,
}

impl GridSpec {
    pub fn uniform(nx: usize, length: f64, ny: usize, ymax: f64) -> Self {
        GridSpec {
            nx,
            length,
            ny,
            ymax,
            spacing: Spacing::Uniform,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || !self.nx.is_power_of_two() {
            return Err(Error::config("nx", "must be a power of two"));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::config("length", "must be positive"));
        }
        if self.ny < 8 {
            return Err(Error::config("ny", "must be at least 8"));
        }
        if !(self.ymax > 0.0 && self.ymax.is_finite()) {
            return Err(Error::config("ymax", "must be positive"));
        }
        if let Spacing::Tanh { beta } = self.spacing {
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(Error::config("stretch", "tanh stretching must be positive"));
            }
        }
        Ok(())
    }

    /// Stable textual key, used for cache hashing.
    pub fn key(&self) -> String {
        let spacing = match self.spacing {
            Spacing::Uniform => "uniform".to_string(),
            Spacing::Tanh { beta } => format!("tanh:{beta:e}"),
        };
        format!(
            "nx={};L={:e};ny={};ymax={:e};{}",
            self.nx, self.length, self.ny, self.ymax, spacing
        )
    }
}

#[derive(Debug, Clone)]
struct IntervalRule {
    start: usize,
    /// Integral weights of the interval for the nodes `start..start+6`.
    weights: [f64; INTERVAL_POINTS],
    /// Gauss points of the interval and their weights.
    gauss_y: [f64; 6],
    gauss_w: [f64; 6],
    /// Lagrange basis values `basis[q][k]` at Gauss point `q`.
    basis: [[f64; INTERVAL_POINTS]; 6],
}

#[derive(Debug, Clone)]
struct Stencil {
    start: usize,
    weights: [f64; D1_POINTS],
}

/// The discrete half-plane. Immutable after construction and shared by
/// reference counting between all fields that live on it.
pub struct Grid {
    spec: GridSpec,
    exec: Exec,
    y: Vec<f64>,
    quad: Vec<f64>,
    intervals: Vec<IntervalRule>,
    d1: Vec<Stencil>,
    xi: Vec<f64>,
    fft_forward: Arc<dyn Fft<f64>>,
    fft_inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("spec", &self.spec)
            .field("exec", &self.exec)
            .finish_non_exhaustive()
    }
}

impl Grid {
    pub fn new(spec: GridSpec, exec: Exec) -> Result<Arc<Grid>> {
        spec.validate()?;
        let ny = spec.ny;
        let y: Vec<f64> = (0..ny)
            .map(|i| {
                let s = i as f64 / (ny - 1) as f64;
                match spec.spacing {
                    Spacing::Uniform => spec.ymax * s,
                    Spacing::Tanh { beta } => {
                        spec.ymax * (1.0 - (beta * (1.0 - s)).tanh() / beta.tanh())
                    }
                }
            })
            .collect();
        // pin the endpoints exactly
        let mut y = y;
        y[0] = 0.0;
        y[ny - 1] = spec.ymax;

        let intervals: Vec<IntervalRule> = (0..ny - 1)
            .map(|i| {
                let start = i.saturating_sub(2).min(ny - INTERVAL_POINTS);
                let nodes = &y[start..start + INTERVAL_POINTS];
                let (a, b) = (y[i], y[i + 1]);
                let half = 0.5 * (b - a);
                let mid = 0.5 * (a + b);
                let mut gauss_y = [0.0; 6];
                let mut gauss_w = [0.0; 6];
                let mut basis = [[0.0; INTERVAL_POINTS]; 6];
                let mut weights = [0.0; INTERVAL_POINTS];
                for q in 0..6 {
                    gauss_y[q] = mid + half * GL6_NODES[q];
                    gauss_w[q] = half * GL6_WEIGHTS[q];
                    let l = lagrange_basis(nodes, gauss_y[q]);
                    for k in 0..INTERVAL_POINTS {
                        basis[q][k] = l[k];
                        weights[k] += gauss_w[q] * l[k];
                    }
                }
                IntervalRule {
                    start,
                    weights,
                    gauss_y,
                    gauss_w,
                    basis,
                }
            })
            .collect();

        let mut quad = vec![0.0; ny];
        for rule in &intervals {
            for k in 0..INTERVAL_POINTS {
                quad[rule.start + k] += rule.weights[k];
            }
        }

        let d1 = (0..ny)
            .map(|i| {
                let start = i.saturating_sub(2).min(ny - D1_POINTS);
                let w = fornberg(y[i], &y[start..start + D1_POINTS], 1);
                let mut weights = [0.0; D1_POINTS];
                weights.copy_from_slice(&w[1]);
                Stencil { start, weights }
            })
            .collect();

        let nx = spec.nx;
        let base = 2.0 * std::f64::consts::PI / spec.length;
        let xi = (0..nx)
            .map(|j| {
                let signed = if j <= nx / 2 { j as f64 } else { j as f64 - nx as f64 };
                base * signed
            })
            .collect();

        let mut planner = FftPlanner::new();
        let fft_forward = planner.plan_fft_forward(nx);
        let fft_inverse = planner.plan_fft_inverse(nx);

        Ok(Arc::new(Grid {
            spec,
            exec,
            y,
            quad,
            intervals,
            d1,
            xi,
            fft_forward,
            fft_inverse,
        }))
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }
    pub fn exec(&self) -> Exec {
        self.exec
    }
    pub fn nx(&self) -> usize {
        self.spec.nx
    }
    pub fn ny(&self) -> usize {
        self.spec.ny
    }
    pub fn length(&self) -> f64 {
        self.spec.length
    }
    pub fn ymax(&self) -> f64 {
        self.spec.ymax
    }
    pub fn y(&self) -> &[f64] {
        &self.y
    }
    /// Quadrature weights for `∫_0^Ymax`.
    pub fn quad_weights(&self) -> &[f64] {
        &self.quad
    }
    /// Signed tangential wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.xi
    }
    pub fn dx(&self) -> f64 {
        self.spec.length / self.spec.nx as f64
    }
    pub fn x(&self, n: usize) -> f64 {
        n as f64 * self.dx()
    }
    /// Index of the Nyquist mode, if the mode count is even.
    pub fn nyquist(&self) -> Option<usize> {
        (self.spec.nx >= 2).then_some(self.spec.nx / 2)
    }
    pub fn is_uniform(&self) -> bool {
        matches!(self.spec.spacing, Spacing::Uniform)
    }

    /// True when `Ymax >= 4 sqrt(8 <T>)`, the height at which the Gaussian
    /// weight of a heat-like solution is still resolved at `t = T`.
    pub fn tail_resolved_until(&self, t_final: f64) -> bool {
        self.spec.ymax >= 4.0 * (8.0 * (1.0 + t_final)).sqrt()
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        std::ptr::eq(self, other) || self.spec == other.spec
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{} vs {}",
                self.spec.key(),
                other.spec.key()
            )))
        }
    }

    pub(crate) fn fft_forward(&self) -> &dyn Fft<f64> {
        self.fft_forward.as_ref()
    }
    pub(crate) fn fft_inverse(&self) -> &dyn Fft<f64> {
        self.fft_inverse.as_ref()
    }

    /// `∫_0^Ymax a dy`.
    pub fn integrate<T: Scalar>(&self, a: &[T]) -> T {
        debug_assert_eq!(a.len(), self.ny());
        a.iter()
            .zip(&self.quad)
            .fold(T::zero(), |acc, (&v, &w)| acc + v * w)
    }

    /// `∫_0^Ymax |a|^2 dy`.
    pub fn integrate_sq<T: Scalar>(&self, a: &[T]) -> f64 {
        a.iter().zip(&self.quad).map(|(v, w)| v.abs_sq() * w).sum()
    }

    fn interval_integral<T: Scalar>(&self, i: usize, a: &[T]) -> T {
        let rule = &self.intervals[i];
        (0..INTERVAL_POINTS).fold(T::zero(), |acc, k| acc + a[rule.start + k] * rule.weights[k])
    }

    /// `out[i] = ∫_{y_i}^{Ymax} a dy`.
    pub fn cumulative_from_top<T: Scalar>(&self, a: &[T], out: &mut [T]) {
        let ny = self.ny();
        out[ny - 1] = T::zero();
        for i in (0..ny - 1).rev() {
            out[i] = out[i + 1] + self.interval_integral(i, a);
        }
    }

    /// `out[i] = ∫_0^{y_i} a dy`.
    pub fn cumulative_from_wall<T: Scalar>(&self, a: &[T], out: &mut [T]) {
        out[0] = T::zero();
        for i in 0..self.ny() - 1 {
            out[i + 1] = out[i] + self.interval_integral(i, a);
        }
    }

    /// Fourth-order first derivative in y.
    pub fn ddy_slice<T: Scalar>(&self, a: &[T], out: &mut [T]) {
        for (o, st) in out.iter_mut().zip(&self.d1) {
            *o = (0..D1_POINTS).fold(T::zero(), |acc, k| acc + a[st.start + k] * st.weights[k]);
        }
    }

    /// `out(y) = e^{-y^2/(4s)} ∫_0^y e^{y'^2/(4s)} g(y') dy'`, evaluated with the
    /// bounded recurrence `out_{i+1} = e^{-(y_{i+1}^2 - y_i^2)/(4s)} out_i + ∫ e^{-(y_{i+1}^2 - y'^2)/(4s)} g`.
    pub fn gaussian_primitive<T: Scalar>(&self, g: &[T], s: f64, out: &mut [T]) {
        let y = &self.y;
        out[0] = T::zero();
        let inv = 1.0 / (4.0 * s);
        for i in 0..self.ny() - 1 {
            let rule = &self.intervals[i];
            let top = y[i + 1] * y[i + 1];
            let mut acc = T::zero();
            for q in 0..6 {
                let yq = rule.gauss_y[q];
                let damp = (-(top - yq * yq) * inv).exp() * rule.gauss_w[q];
                let gq = (0..INTERVAL_POINTS)
                    .fold(T::zero(), |a, k| a + g[rule.start + k] * rule.basis[q][k]);
                acc = acc + gq * damp;
            }
            let carry = (-(top - y[i] * y[i]) * inv).exp();
            out[i + 1] = out[i] * carry + acc;
        }
    }
}
