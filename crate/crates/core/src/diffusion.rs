//! Implicit treatment of `∂_t a - ∂_y^2 a + c a = F` in y.
//!
//! On uniform grids the second derivative uses the fourth-order compact
//! (Numerov) pair `B a'' = A a` with `B = tridiag(1, 10, 1) / 12` and
//! `A = tridiag(1, -2, 1) / h^2`; stretched grids fall back to the
//! three-point operator with `B = I`. The theta-scheme
//!
//! `(B (1 + θ c dt) - θ dt A) a^{n+1} = (B (1 - (1-θ) c dt) + (1-θ) dt A) a^n + dt B F`
//!
//! gives Crank-Nicolson at `θ = 1/2` and backward Euler at `θ = 1`. The top
//! node is always homogeneous Dirichlet.

use crate::error::Result;
use crate::grid::{Grid, Scalar};
use crate::tridiag::{Tridiag, TridiagLu};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LowerBoundary {
    /// `a(0) = 0`.
    Dirichlet,
    /// `∂_y a(0) = 0`.
    Neumann,
}

#[derive(Debug, Clone)]
pub struct ImplicitDiffusion {
    lu: TridiagLu,
    mass: Tridiag,
    explicit: Tridiag,
    dt: f64,
}

/// Mass and stiffness matrices with the boundary rows left to the caller.
fn operators(grid: &Grid, lower: LowerBoundary) -> (Tridiag, Tridiag) {
    let n = grid.ny();
    let y = grid.y();
    let mut b = Tridiag::zeros(n);
    let mut a = Tridiag::zeros(n);
    let uniform = grid.is_uniform();
    for i in 1..n - 1 {
        let hm = y[i] - y[i - 1];
        let hp = y[i + 1] - y[i];
        if uniform {
            let h2 = hm * hp;
            b.lower[i] = 1.0 / 12.0;
            b.diag[i] = 10.0 / 12.0;
            b.upper[i] = 1.0 / 12.0;
            a.lower[i] = 1.0 / h2;
            a.diag[i] = -2.0 / h2;
            a.upper[i] = 1.0 / h2;
        } else {
            b.diag[i] = 1.0;
            a.lower[i] = 2.0 / (hm * (hm + hp));
            a.diag[i] = -2.0 / (hm * hp);
            a.upper[i] = 2.0 / (hp * (hm + hp));
        }
    }
    if lower == LowerBoundary::Neumann {
        // half-cell balance with a consistent mass row
        let h = y[1] - y[0];
        b.diag[0] = 1.0 / 3.0;
        b.upper[0] = 1.0 / 6.0;
        a.diag[0] = -1.0 / (h * h);
        a.upper[0] = 1.0 / (h * h);
    }
    (b, a)
}

impl ImplicitDiffusion {
    pub fn new(grid: &Grid, dt: f64, damping: f64, theta: f64, lower: LowerBoundary) -> Result<Self> {
        let n = grid.ny();
        let (b, a) = operators(grid, lower);
        let mut lhs = Tridiag::zeros(n);
        let mut rhs = Tridiag::zeros(n);
        for i in 0..n {
            let dirichlet_row =
                i == n - 1 || (i == 0 && lower == LowerBoundary::Dirichlet);
            if dirichlet_row {
                lhs.diag[i] = 1.0;
                continue;
            }
            let li = 1.0 + theta * damping * dt;
            let ri = 1.0 - (1.0 - theta) * damping * dt;
            lhs.lower[i] = li * b.lower[i] - theta * dt * a.lower[i];
            lhs.diag[i] = li * b.diag[i] - theta * dt * a.diag[i];
            lhs.upper[i] = li * b.upper[i] - theta * dt * a.upper[i];
            rhs.lower[i] = ri * b.lower[i] + (1.0 - theta) * dt * a.lower[i];
            rhs.diag[i] = ri * b.diag[i] + (1.0 - theta) * dt * a.diag[i];
            rhs.upper[i] = ri * b.upper[i] + (1.0 - theta) * dt * a.upper[i];
        }
        // boundary rows of the mass matrix must not feed forcing into Dirichlet nodes
        let mut mass = b;
        mass.diag[n - 1] = 0.0;
        mass.lower[n - 1] = 0.0;
        if lower == LowerBoundary::Dirichlet {
            mass.diag[0] = 0.0;
            mass.upper[0] = 0.0;
        }
        Ok(ImplicitDiffusion {
            lu: lhs.factor()?,
            mass,
            explicit: rhs,
            dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advance `a` in place by one step with explicit forcing `forcing`.
    /// `scratch` must have the same length as `a`.
    pub fn advance<T: Scalar>(&self, a: &mut [T], forcing: &[T], scratch: &mut [T]) {
        let n = a.len();
        self.explicit.apply(a, scratch);
        self.mass.apply(forcing, a);
        for i in 0..n {
            a[i] = scratch[i] + a[i] * self.dt;
        }
        self.lu.solve_in_place(a);
    }
}
