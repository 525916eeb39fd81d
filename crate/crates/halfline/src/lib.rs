//! Semiclassical analysis of the defocusing NLS half-line problem with
//! Dirichlet data: boundary spectral transforms, exact direct scattering,
//! the model Riemann–Hilbert problem and its genus-zero asymptotics.

pub mod acceptance;
pub mod boundary_data;
pub mod direct_scattering;
pub mod error;
pub mod gfunction;
pub mod quadrature;
pub mod rhp_solver;
pub mod roots;
pub mod spectral_transforms;
pub mod vacuum_domain;

pub use error::{Error, Result};
