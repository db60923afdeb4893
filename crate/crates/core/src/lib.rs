//! Nodal discontinuous Galerkin discretization of the 3D time-domain Maxwell
//! equations on straight tetrahedra, with low-storage Runge-Kutta time
//! marching and an element-local postprocessing that lifts the discrete
//! fields from `P_k` to `P_{k+1}` with one extra order of convergence in the
//! `H(curl)` norm.

pub mod analysis;
pub mod dg_operator;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod postprocess;
pub mod reference_element;
pub mod scenarios;
pub mod time_integration;

pub use error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;

/// Vacuum permittivity (F/m), `(1 / 36 pi) 1e-9`.
pub const EPS0: f64 = 1e-9 / (36.0 * std::f64::consts::PI);
/// Vacuum permeability (H/m), `4 pi 1e-7`.
pub const MU0: f64 = 4.0 * std::f64::consts::PI * 1e-7;

/// Speed of light in vacuum for [`EPS0`] and [`MU0`]; exactly `3e8` m/s up
/// to rounding.
pub fn c0() -> f64 {
    1.0 / (EPS0 * MU0).sqrt()
}

/// Free-space impedance `sqrt(mu0 / eps0)` (ohm).
pub fn z0() -> f64 {
    (MU0 / EPS0).sqrt()
}
