//! Galerkin boundary elements for the Helmholtz transmission problem.
//!
//! Both traces use continuous piecewise-linear elements. The exterior
//! traces of the total field solve `(A(k0) + A(kD)) γ⁺u = γ⁺u_in`, where
//! `A = [[-K, V], [W, K']]`; the scattered field follows from the
//! representation formula.

pub mod assembly;
pub mod kernel;
pub mod potentials;
pub mod quadrature;
pub mod solver;

pub use assembly::{assemble_calderon, mass_matrix, CalderonBlocks, RESOLUTION_LIMIT};
pub use kernel::{complex_wavenumber, helmholtz_g, Wavenumbers};
pub use potentials::{layer_potential_rows, plane_wave_moments, point_source_moments};
pub use quadrature::QuadratureConfig;
pub use solver::{
    evaluate_representation, scattered_field_point_source, solve_transmission, BemScene, BemSolver, CauchyTraces,
    ExteriorSystem, FactorizedSystem, PotentialRows, TransmissionSolution,
};
