//! Reduced-order model of the wall's scattered field.
//!
//! Offline, the wall is solved with the BEM at every node of a parameter
//! grid and the fields at image pixels and receivers are stacked into one
//! column per node. A truncated SVD compresses each stack and cubic splines
//! interpolate the right singular vectors over the parameters. Online, fields
//! and their parameter derivatives cost `O(N·K)` and never touch the BEM.

mod params;
mod pod;
mod snapshots;
mod spline;

pub use params::{sample_parameter_grid, ParamAxis, ParameterSpace, WallParameter};
pub use pod::{fit_interpolant, pod_truncate, PodFactors, PodModel, PodValue};
pub use snapshots::{build_snapshots, MeshPolicy, RowKey, RowLayout, SnapshotMatrix, Snapshots};
pub use spline::CubicBasis;
