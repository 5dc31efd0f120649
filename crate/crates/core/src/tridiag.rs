//! Thomas algorithm for real tridiagonal systems with real or complex
//! right-hand sides.

use std::ops::{Mul, Sub};

use crate::error::{Error, Result};

/// A tridiagonal matrix stored by diagonals. `lower[0]` and `upper[n-1]`
/// are ignored.
#[derive(Debug, Clone)]
pub struct Tridiag {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Forward-eliminated form of a [`Tridiag`], reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct TridiagLu {
    lower: Vec<f64>,
    inv_pivot: Vec<f64>,
    upper_scaled: Vec<f64>,
}

impl Tridiag {
    pub fn zeros(n: usize) -> Self {
        Tridiag {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// y = A x
    pub fn apply<T>(&self, x: &[T], out: &mut [T])
    where
        T: Copy + Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        let n = self.len();
        debug_assert_eq!(x.len(), n);
        for i in 0..n {
            let mut acc = x[i] * self.diag[i];
            if i > 0 {
                acc = acc + x[i - 1] * self.lower[i];
            }
            if i + 1 < n {
                acc = acc + x[i + 1] * self.upper[i];
            }
            out[i] = acc;
        }
    }

    pub fn factor(&self) -> Result<TridiagLu> {
        let n = self.len();
        let mut inv_pivot = vec![0.0; n];
        let mut upper_scaled = vec![0.0; n];
        let mut prev = 0.0;
        for i in 0..n {
            let pivot = if i == 0 {
                self.diag[0]
            } else {
                self.diag[i] - self.lower[i] * prev
            };
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::SingularPivot { row: i });
            }
            inv_pivot[i] = 1.0 / pivot;
            prev = if i + 1 < n { self.upper[i] / pivot } else { 0.0 };
            upper_scaled[i] = prev;
        }
        Ok(TridiagLu {
            lower: self.lower.clone(),
            inv_pivot,
            upper_scaled,
        })
    }
}

impl TridiagLu {
    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    /// Overwrite `rhs` with the solution.
    pub fn solve_in_place<T>(&self, rhs: &mut [T])
    where
        T: Copy + Mul<f64, Output = T> + Sub<Output = T>,
    {
        let n = self.len();
        assert_eq!(rhs.len(), n, "rhs length does not match the factorization");
        if n == 0 {
            return;
        }
        rhs[0] = rhs[0] * self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - rhs[i - 1] * self.lower[i]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] = rhs[i] - rhs[i + 1] * self.upper_scaled[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustfft::num_complex::Complex64;

    fn sample(n: usize) -> Tridiag {
        let mut a = Tridiag::zeros(n);
        for i in 0..n {
            a.lower[i] = -1.0 + 0.01 * i as f64;
            a.diag[i] = 4.0 + (i as f64).sin();
            a.upper[i] = -1.5;
        }
        a
    }

    #[test]
    fn solves_real_system() {
        let a = sample(37);
        let x: Vec<f64> = (0..37).map(|i| (i as f64 * 0.3).cos()).collect();
        let mut b = vec![0.0; 37];
        a.apply(&x, &mut b);
        a.factor().unwrap().solve_in_place(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn solves_complex_rhs() {
        let a = sample(20);
        let x: Vec<Complex64> = (0..20)
            .map(|i| Complex64::new(i as f64, -(i as f64).sqrt()))
            .collect();
        let mut b = vec![Complex64::new(0.0, 0.0); 20];
        a.apply(&x, &mut b);
        a.factor().unwrap().solve_in_place(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let mut a = sample(5);
        a.diag[0] = 0.0;
        assert!(matches!(a.factor(), Err(Error::SingularPivot { row: 0 })));
    }
}
