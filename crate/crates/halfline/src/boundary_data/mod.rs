//! Dirichlet boundary data, its admissibility checks and the derived
//! scalar structure (critical points, turning points, phase).

mod critical;
mod profile;
mod validate;

pub use critical::{Branch, CriticalStructure, LevelGaps, TurningPoints, critical_structure, lambda_squared, turning_points};
pub use profile::{BoundaryProfile, FnShape, Pchip, ProfileShape, ProfileSpec, SechTanh, TableShape, build_profile};
pub use validate::{Clause, ValidationReport, default_validation_grid, validate_assumption};
