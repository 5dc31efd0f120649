//! Tangential Littlewood-Paley analysis: dyadic blocks, Besov and
//! Chemin-Lerner norms, Bony's paraproduct split and the analytic
//! multiplier `e^{r |xi|}`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Field2D;
use crate::grid::Grid;

const LOW: f64 = 0.75;
const HIGH: f64 = 4.0 / 3.0;

/// `e^{-1/x}` for `x > 0`, zero otherwise.
fn flat(x: f64) -> f64 {
    if x <= 0.0 || 1.0 / x > 700.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// Smooth step rising from 0 at `x <= 0` to 1 at `x >= 1`.
pub fn smoothstep(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let a = flat(x);
    let b = flat(1.0 - x);
    a / (a + b)
}

/// Low-pass bump: 1 on `|τ| <= 3/4`, 0 on `|τ| >= 4/3`.
pub fn chi_lp(tau: f64) -> f64 {
    1.0 - smoothstep((tau.abs() - LOW) / (HIGH - LOW))
}

/// Dyadic bump `chi_lp(τ/2) - chi_lp(τ)`, supported in `3/4 <= |τ| <= 8/3`.
pub fn phi_lp(tau: f64) -> f64 {
    chi_lp(0.5 * tau) - chi_lp(tau)
}

#[derive(Debug, Clone)]
pub struct DyadicFilterBank {
    k_min: i32,
    k_max: i32,
    length: f64,
    wavenumbers: Vec<f64>,
    /// `phi_lp(2^{-k} |xi_j|)` indexed `[k - k_min][j]`.
    symbols: Vec<Vec<f64>>,
}

impl DyadicFilterBank {
    pub fn new(length: f64, nx: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::config("length", "must be positive"));
        }
        if nx < 8 || !nx.is_power_of_two() {
            return Err(Error::config("nx", "must be a power of two >= 8 for a dyadic range"));
        }
        let base = 2.0 * std::f64::consts::PI / length;
        let k_min = base.log2().floor() as i32 - 1;
        let k_max = (std::f64::consts::PI * nx as f64 / length).log2().ceil() as i32 + 1;
        let wavenumbers: Vec<f64> = (0..nx)
            .map(|j| {
                let s = if j <= nx / 2 { j as f64 } else { j as f64 - nx as f64 };
                base * s
            })
            .collect();
        let symbols = (k_min..=k_max)
            .map(|k| {
                wavenumbers
                    .iter()
                    .map(|xi| phi_lp(2f64.powi(-k) * xi.abs()))
                    .collect()
            })
            .collect();
        Ok(DyadicFilterBank {
            k_min,
            k_max,
            length,
            wavenumbers,
            symbols,
        })
    }

    pub fn for_grid(grid: &Grid) -> Result<Self> {
        Self::new(grid.length(), grid.nx())
    }

    pub fn k_min(&self) -> i32 {
        self.k_min
    }
    pub fn k_max(&self) -> i32 {
        self.k_max
    }
    pub fn blocks(&self) -> impl Iterator<Item = i32> {
        self.k_min..=self.k_max
    }
    pub fn block_count(&self) -> usize {
        (self.k_max - self.k_min + 1) as usize
    }
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn phi_lp(&self, tau: f64) -> f64 {
        phi_lp(tau)
    }
    pub fn chi_lp(&self, tau: f64) -> f64 {
        chi_lp(tau)
    }

    /// `phi_lp(2^{-k} |xi_j|)` for every mode, or `None` outside the bank.
    pub fn block_symbol(&self, k: i32) -> Option<&[f64]> {
        (self.k_min..=self.k_max)
            .contains(&k)
            .then(|| self.symbols[(k - self.k_min) as usize].as_slice())
    }

    /// Largest partition-of-unity defect `|Σ_k phi_lp(2^{-k} τ) - 1|` over a
    /// fine sample of the resolved band.
    pub fn partition_defect(&self) -> f64 {
        let lo = self.wavenumbers[1];
        let hi = self.wavenumbers[self.wavenumbers.len() / 2];
        let n = 20_000;
        (0..=n)
            .map(|i| {
                let tau = lo * (hi / lo).powf(i as f64 / n as f64);
                let sum: f64 = self.blocks().map(|k| phi_lp(2f64.powi(-k) * tau)).sum();
                (sum - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    fn check(&self, a: &Field2D) -> Result<()> {
        if a.grid().nx() != self.wavenumbers.len() || a.grid().length() != self.length {
            return Err(Error::GridMismatch(format!(
                "filter bank built for nx = {}, L = {}",
                self.wavenumbers.len(),
                self.length
            )));
        }
        Ok(())
    }

    /// `Δ_k a`; blocks outside the bank give the zero field.
    pub fn dyadic_block(&self, a: &Field2D, k: i32) -> Result<Field2D> {
        self.check(a)?;
        Ok(match self.block_symbol(k) {
            Some(sym) => a.apply_symbol(|j| Complex64::new(sym[j], 0.0)),
            None => Field2D::zeros(a.grid()),
        })
    }

    /// `S_k a = mean(a) + Σ_{k' <= k - 1} Δ_{k'} a`.
    pub fn low_pass(&self, a: &Field2D, k: i32) -> Result<Field2D> {
        self.check(a)?;
        let nx = self.wavenumbers.len();
        let mut sym = vec![0.0; nx];
        sym[0] = 1.0;
        for kk in self.k_min..k.min(self.k_max + 1) {
            for (s, b) in sym.iter_mut().zip(&self.symbols[(kk - self.k_min) as usize]) {
                *s += b;
            }
        }
        Ok(a.apply_symbol(|j| Complex64::new(sym[j], 0.0)))
    }

    /// Block norms from per-mode energies `E_j`:
    /// `‖Δ_k a‖ = sqrt(L Σ_j phi_k(xi_j)^2 e^{2 r |xi_j|} E_j)`.
    pub fn block_norms_from_energies(&self, energies: &[f64], radius: f64) -> Vec<f64> {
        let growth: Vec<f64> = self
            .wavenumbers
            .iter()
            .map(|xi| (2.0 * radius * xi.abs()).exp())
            .collect();
        self.symbols
            .iter()
            .map(|sym| {
                let s: f64 = sym
                    .iter()
                    .zip(energies)
                    .zip(&growth)
                    .map(|((p, e), g)| p * p * g * e)
                    .sum();
                (self.length * s).sqrt()
            })
            .collect()
    }

    /// `‖Δ_k a‖_{L^2}` for every block of the bank.
    pub fn block_norms(&self, a: &Field2D) -> Result<Vec<f64>> {
        self.check(a)?;
        Ok(self.block_norms_from_energies(&a.mode_energies(None), 0.0))
    }

    /// `Σ_k 2^{ks} b_k` for block norms `b` indexed from `k_min`.
    pub fn besov_from_blocks(&self, blocks: &[f64], s: f64) -> f64 {
        blocks
            .iter()
            .zip(self.blocks())
            .map(|(b, k)| 2f64.powf(k as f64 * s) * b)
            .sum()
    }

    /// `‖a‖_{B^{s,0}}`. Indices with `|s| <= 1/2` are summed directly; `s = 1`
    /// is evaluated as `‖∂_x a‖_{B^{0,0}}`.
    pub fn besov_norm(&self, a: &Field2D, s: f64) -> Result<f64> {
        if s.abs() <= 0.5 {
            Ok(self.besov_from_blocks(&self.block_norms(a)?, s))
        } else if s == 1.0 {
            Ok(self.besov_from_blocks(&self.block_norms(&a.ddx())?, 0.0))
        } else {
            Err(Error::config("s", "Besov index must satisfy |s| <= 1/2 or s = 1"))
        }
    }

    /// Chemin-Lerner norm of a sampled time series (see [`chemin_lerner_from_blocks`]).
    pub fn chemin_lerner_norm(
        &self,
        series: &[(f64, Field2D)],
        p: TimeExponent,
        s: f64,
        window: (f64, f64),
        weight: impl Fn(f64) -> f64,
    ) -> Result<f64> {
        if !(s.abs() <= 0.5) {
            return Err(Error::config("s", "Chemin-Lerner index must satisfy |s| <= 1/2"));
        }
        let mut times = Vec::new();
        let mut blocks = Vec::new();
        for (t, a) in series {
            if *t >= window.0 && *t <= window.1 {
                times.push(*t);
                blocks.push(self.block_norms(a)?);
            }
        }
        chemin_lerner_from_blocks(self.k_min, &times, &blocks, p, s, window, weight)
    }

    /// Bony split `fg = T_f g + T_g f + R(f, g)`, products taken pointwise
    /// in physical space without dealiasing. The x-mean acts as the lowest
    /// block, so it belongs to every `S_{k-1}` and the mean-mean product
    /// goes to the remainder.
    pub fn bony_parts(&self, f: &Field2D, g: &Field2D) -> Result<BonyParts> {
        self.check(f)?;
        f.grid().check_same(g.grid())?;
        let grid = f.grid().clone();
        let n = self.block_count();
        let phys = |a: &Field2D| a.to_physical();
        let df: Vec<Vec<f64>> = self
            .blocks()
            .map(|k| self.dyadic_block(f, k).map(|b| phys(&b)))
            .collect::<Result<_>>()?;
        let dg: Vec<Vec<f64>> = self
            .blocks()
            .map(|k| self.dyadic_block(g, k).map(|b| phys(&b)))
            .collect::<Result<_>>()?;
        let mean_only = |a: &Field2D| {
            let mut m = Field2D::zeros(&grid);
            m.mode_mut(0).copy_from_slice(a.mode(0));
            phys(&m)
        };
        let fm = mean_only(f);
        let gm = mean_only(g);
        let size = fm.len();

        let paraproduct = |low_mean: &[f64], low: &[Vec<f64>], high: &[Vec<f64>]| {
            let mut out = vec![0.0; size];
            let mut s = low_mean.to_vec();
            for idx in 0..n {
                // s holds the mean plus blocks k_min..=k-2
                if idx >= 2 {
                    for (a, b) in s.iter_mut().zip(&low[idx - 2]) {
                        *a += b;
                    }
                }
                for ((o, a), b) in out.iter_mut().zip(&s).zip(&high[idx]) {
                    *o += a * b;
                }
            }
            out
        };
        let tfg = paraproduct(&fm, &df, &dg);
        let tgf = paraproduct(&gm, &dg, &df);

        let mut r: Vec<f64> = fm.iter().zip(&gm).map(|(a, b)| a * b).collect();
        for idx in 0..n {
            for jdx in idx.saturating_sub(1)..(idx + 2).min(n) {
                for ((o, a), b) in r.iter_mut().zip(&df[idx]).zip(&dg[jdx]) {
                    *o += a * b;
                }
            }
        }
        Ok(BonyParts {
            t_f_g: Field2D::from_physical(&grid, &tfg)?,
            t_g_f: Field2D::from_physical(&grid, &tgf)?,
            remainder: Field2D::from_physical(&grid, &r)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeExponent {
    One,
    Two,
    Infinity,
}

/// `Σ_k 2^{ks} (∫_window w(t) b_k(t)^p dt)^{1/p}` from sampled block norms
/// `blocks[n][k - k_min]` at `times[n]`, trapezoid rule in time. For
/// `p = ∞` the supremum of `b_k` over the samples is used and the weight is
/// ignored.
pub fn chemin_lerner_from_blocks(
    k_min: i32,
    times: &[f64],
    blocks: &[Vec<f64>],
    p: TimeExponent,
    s: f64,
    window: (f64, f64),
    weight: impl Fn(f64) -> f64,
) -> Result<f64> {
    let idx: Vec<usize> = (0..times.len())
        .filter(|&n| times[n] >= window.0 && times[n] <= window.1)
        .collect();
    let needed = if p == TimeExponent::Infinity { 1 } else { 2 };
    if idx.len() < needed || window.1 <= window.0 {
        return Err(Error::EmptyWindow {
            t0: window.0,
            t1: window.1,
        });
    }
    let nblocks = blocks[idx[0]].len();
    let w: Vec<f64> = idx.iter().map(|&n| weight(times[n])).collect();
    let mut total = 0.0;
    for kb in 0..nblocks {
        let scale = 2f64.powf((k_min + kb as i32) as f64 * s);
        let value = match p {
            TimeExponent::Infinity => idx.iter().map(|&n| blocks[n][kb]).fold(0.0, f64::max),
            TimeExponent::One | TimeExponent::Two => {
                let pw = if p == TimeExponent::One { 1 } else { 2 };
                let mut integral = 0.0;
                for m in 1..idx.len() {
                    let (a, b) = (idx[m - 1], idx[m]);
                    let fa = w[m - 1] * blocks[a][kb].powi(pw);
                    let fb = w[m] * blocks[b][kb].powi(pw);
                    integral += 0.5 * (times[b] - times[a]) * (fa + fb);
                }
                if pw == 1 {
                    integral
                } else {
                    integral.max(0.0).sqrt()
                }
            }
        };
        total += scale * value;
    }
    Ok(total)
}

#[derive(Debug, Clone)]
pub struct BonyParts {
    pub t_f_g: Field2D,
    pub t_g_f: Field2D,
    pub remainder: Field2D,
}

/// Modes whose amplification exceeded `1 / machine epsilon`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AmplificationReport {
    pub max_factor: f64,
    pub flagged_modes: Vec<usize>,
}

impl AmplificationReport {
    pub fn is_clean(&self) -> bool {
        self.flagged_modes.is_empty()
    }
}

/// `F^{-1}(e^{r |xi|} a_hat)` with `r >= 0`.
pub fn analytic_multiplier(a: &Field2D, radius: f64) -> Result<(Field2D, AmplificationReport)> {
    if !(radius >= 0.0) {
        return Err(Error::NegativeRadius { radius });
    }
    let xi = a.grid().wavenumbers();
    let factors: Vec<f64> = xi.iter().map(|x| (radius * x.abs()).exp()).collect();
    let limit = 1.0 / f64::EPSILON;
    let report = AmplificationReport {
        max_factor: factors.iter().cloned().fold(1.0, f64::max),
        flagged_modes: (0..xi.len()).filter(|&j| factors[j] > limit).collect(),
    };
    Ok((a.apply_symbol(|j| Complex64::new(factors[j], 0.0)), report))
}

/// Shared handle used by the diagnostics.
pub type SharedBank = Arc<DyadicFilterBank>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Exec;
    use crate::field::VProfile;
    use crate::grid::GridSpec;
    use std::f64::consts::PI;

    fn setup() -> (Arc<Grid>, DyadicFilterBank) {
        let g = Grid::new(GridSpec::uniform(64, 2.0 * PI, 81, 6.0), Exec::Sequential).unwrap();
        let b = DyadicFilterBank::for_grid(&g).unwrap();
        (g, b)
    }

    #[test]
    fn bank_range_and_bumps() {
        let (_, b) = setup();
        assert_eq!((b.k_min(), b.k_max()), (-1, 6));
        assert_eq!(phi_lp(0.5), 0.0);
        assert_eq!(phi_lp(2.7), 0.0);
        assert_eq!(chi_lp(1.4), 0.0);
        let sum: f64 = b.blocks().map(|k| phi_lp(2f64.powi(-k) * 8.0)).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        let low: f64 = chi_lp(1.0) + (0..40).map(|k| phi_lp(2f64.powi(-k) * 1.0)).sum::<f64>();
        assert!((low - 1.0).abs() < 1e-12);
        assert!(b.partition_defect() < 1e-12);
        assert!(DyadicFilterBank::new(2.0 * PI, 4).is_err());
    }

    #[test]
    fn at_most_two_active_blocks() {
        let (_, b) = setup();
        for j in 1..32 {
            let active: Vec<i32> = b
                .blocks()
                .filter(|&k| b.block_symbol(k).unwrap()[j] != 0.0)
                .collect();
            assert!(!active.is_empty() && active.len() <= 2);
            if active.len() == 2 {
                assert_eq!(active[1], active[0] + 1);
            }
        }
    }

    #[test]
    fn blocks_reassemble_field() {
        let (g, b) = setup();
        let a = Field2D::from_fn(&g, |x, y| ((3.0 * x).sin() + (11.0 * x).cos()) * (-y * y).exp());
        let mut sum = Field2D::zeros(&g);
        for k in b.blocks() {
            sum = sum.add(&b.dyadic_block(&a, k).unwrap()).unwrap();
        }
        assert!(sum.sub(&a).unwrap().l2_norm() <= 1e-12 * a.l2_norm());
        assert!(b.dyadic_block(&a, 40).unwrap().is_zero());
    }

    #[test]
    fn besov_single_block_and_zero() {
        let (g, b) = setup();
        assert_eq!(b.besov_norm(&Field2D::zeros(&g), 0.5).unwrap(), 0.0);
        // |xi| = 3 sits where phi_lp(3 / 2) = 1 and its neighbours vanish
        assert_eq!(phi_lp(1.5), 1.0);
        let shape = VProfile::from_fn(&g, |y| (-y * y).exp());
        let a = Field2D::single_mode(&g, 3, 1.0, 0.0, &shape);
        let expect = 2f64.sqrt() * a.l2_norm();
        assert!((b.besov_norm(&a, 0.5).unwrap() - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn multiplier_semigroup_and_sign() {
        let (g, _) = setup();
        let shape = VProfile::from_fn(&g, |y| (-y * y).exp());
        let a = Field2D::single_mode(&g, 4, 1.0, 0.0, &shape);
        let (m, rep) = analytic_multiplier(&a, 0.25).unwrap();
        assert!(rep.is_clean());
        assert!((m.l2_norm() - 1f64.exp() * a.l2_norm()).abs() < 1e-12 * m.l2_norm());
        let (m2, _) = analytic_multiplier(&m, 0.1).unwrap();
        let (m3, _) = analytic_multiplier(&a, 0.35).unwrap();
        assert!(m2.sub(&m3).unwrap().l2_norm() < 1e-12 * m3.l2_norm());
        assert!(matches!(
            analytic_multiplier(&a, -0.1),
            Err(Error::NegativeRadius { .. })
        ));
        let (id, _) = analytic_multiplier(&a, 0.0).unwrap();
        assert_eq!(id.coefficients(), a.coefficients());
    }

    #[test]
    fn bony_single_mode() {
        let (g, b) = setup();
        let shape = VProfile::from_fn(&g, |y| (-y * y).exp());
        let f = Field2D::single_mode(&g, 5, 1.0, 0.0, &shape);
        let parts = b.bony_parts(&f, &f).unwrap();
        let sum = parts.t_f_g.add(&parts.t_g_f).unwrap().add(&parts.remainder).unwrap();
        let prod = f.product(&f, false).unwrap();
        assert!(sum.sub(&prod).unwrap().l2_norm() <= 1e-12 * prod.l2_norm());
    }

    #[test]
    fn bony_constant_factor() {
        let (g, b) = setup();
        let shape = VProfile::from_fn(&g, |y| (-y * y).exp());
        let f = Field2D::single_mode(&g, 0, 1.0, 0.0, &shape);
        let h = Field2D::from_fn(&g, |x, y| (7.0 * x).sin() * y * (-y * y).exp());
        let parts = b.bony_parts(&f, &h).unwrap();
        assert!(parts.t_g_f.l2_norm() < 1e-14);
        let sum = parts.t_f_g.add(&parts.remainder).unwrap();
        let prod = f.product(&h, false).unwrap();
        assert!(sum.sub(&prod).unwrap().l2_norm() <= 1e-12 * prod.l2_norm());
    }

    #[test]
    fn chemin_lerner_linear_amplitude() {
        let (g, b) = setup();
        let shape = VProfile::from_fn(&g, |y| (-y * y).exp());
        let a = Field2D::single_mode(&g, 3, 1.0, 0.0, &shape);
        let n = 2000;
        let series: Vec<(f64, Field2D)> = (0..=n)
            .map(|i| {
                let t = i as f64 / n as f64;
                (t, a.scaled(t))
            })
            .collect();
        let v = b
            .chemin_lerner_norm(&series, TimeExponent::Two, 0.5, (0.0, 1.0), |_| 1.0)
            .unwrap();
        let expect = 2f64.sqrt() * a.l2_norm() * (1.0f64 / 3.0).sqrt();
        assert!((v - expect).abs() < 1e-6 * expect);
        let zero = b
            .chemin_lerner_norm(&series, TimeExponent::One, 0.5, (0.0, 1.0), |_| 0.0)
            .unwrap();
        assert_eq!(zero, 0.0);
        assert!(b
            .chemin_lerner_norm(&series, TimeExponent::Two, 0.5, (2.0, 3.0), |_| 1.0)
            .is_err());
    }
}
