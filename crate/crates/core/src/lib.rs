//! Pseudo-spectral simulator and diagnostics for the two-dimensional Prandtl
//! boundary-layer system with small tangentially analytic data.

pub mod cache;
pub mod config;
pub mod corrector;
pub mod diagnostics;
pub mod diffusion;
pub mod error;
pub mod exec;
pub mod field;
pub mod grid;
pub mod io;
pub mod lp;
pub mod prandtl;
pub mod quadrature;
pub mod tridiag;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Exec;
pub use field::{Field2D, VProfile};
pub use grid::{Grid, GridSpec, Spacing};
