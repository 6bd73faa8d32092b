//! Through-wall multi-static SAR image formation.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] – obstacle meshes, acquisition geometry and image grids.
//! * [`bem`] – Galerkin boundary elements for the Helmholtz transmission
//!   problem and the Green's function of a scene containing the obstacle.
//! * [`rom`] – offline snapshot generation, truncated SVD and spline
//!   interpolation of the coefficients (PODI), online evaluation.
//! * [`forward`] – the through-wall and free-space SAR data models.
//! * [`invert`] – proximal operators, FISTA, reduced gradients and BFGS.
//! * [`oracle`] – independent reference solutions used for validation.
//! * [`arrayio`] – the `TWSR0001` binary array container.

pub mod arrayio;
pub mod bem;
pub mod error;
pub mod forward;
pub mod geometry;
pub mod invert;
pub mod oracle;
pub mod rom;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Speed of light in vacuum (m/s).
pub const C0: f64 = 299_792_458.0;
/// Vacuum permittivity (F/m).
pub const EPS0: f64 = 8.854_187_812_8e-12;
