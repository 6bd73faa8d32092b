//! Independent reference solutions: the penetrable-sphere series, central
//! finite differences and a dense solver for small proximal problems.

pub mod fd;
pub mod prox;
pub mod sphere;

pub use fd::fd_gradient;
pub use prox::{prox_bruteforce, prox_objective, RegularizerKind};
pub use sphere::{sphere_series_field, SphereSeriesConfig, SphereSource};
