//! Obstacle meshes, collection geometry and image grids.

pub mod acquisition;
pub mod grid;
pub mod mesh;
pub mod shapes;
pub mod vec3;

pub use acquisition::{make_acquisition, AcquisitionConfig, AcquisitionGeometry, Antenna, AntennaRole, Channel, Sample};
pub use grid::{make_image_grid, ImageGrid};
pub use mesh::{SurfaceMesh, ValidationReport};
pub use shapes::{build_corner_wall, build_sphere_mesh, WallParams};
pub use vec3::Vec3;
