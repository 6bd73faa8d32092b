use serde::{Deserialize, Serialize};

use super::mesh::SurfaceMesh;
use super::vec3::Vec3;
use crate::{Error, Result};

/// Uniform 2D grid of pixel centres at a fixed height.
///
/// Pixels are stored row-major with x fastest: `p = iy · nx + ix`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageGrid {
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
    pub center: [f64; 2],
    pub height: f64,
}

pub fn make_image_grid(extent: [f64; 2], spacing: f64, plane_height: f64, center: [f64; 2]) -> Result<ImageGrid> {
    if !(spacing > 0.0) {
        return Err(Error::invalid("pixel spacing must be positive"));
    }
    let count = |e: f64| ((e.max(0.0) / spacing) + 1e-9).floor() as usize + 1;
    Ok(ImageGrid {
        nx: count(extent[0]),
        ny: count(extent[1]),
        spacing,
        center,
        height: plane_height,
    })
}

impl ImageGrid {
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.center[0] + (ix as f64 - 0.5 * (self.nx - 1) as f64) * self.spacing
    }

    pub fn y(&self, iy: usize) -> f64 {
        self.center[1] + (iy as f64 - 0.5 * (self.ny - 1) as f64) * self.spacing
    }

    pub fn point(&self, p: usize) -> Vec3 {
        [self.x(p % self.nx), self.y(p / self.nx), self.height]
    }

    pub fn points(&self) -> Vec<Vec3> {
        (0..self.len()).map(|p| self.point(p)).collect()
    }

    /// Index of the pixel nearest to `(x, y)`, if inside the grid.
    pub fn nearest(&self, x: f64, y: f64) -> Option<usize> {
        let fx = (x - self.x(0)) / self.spacing;
        let fy = (y - self.y(0)) / self.spacing;
        let (ix, iy) = (fx.round(), fy.round());
        if ix < 0.0 || iy < 0.0 || ix >= self.nx as f64 || iy >= self.ny as f64 {
            return None;
        }
        Some(iy as usize * self.nx + ix as usize)
    }

    /// Every pixel outside the obstacle and at least `clearance` from it?
    pub fn check_clear_of(&self, mesh: &SurfaceMesh, clearance: f64) -> Result<()> {
        for p in 0..self.len() {
            let x = self.point(p);
            let d = mesh.distance_to(x);
            if mesh.contains(x) || d <= clearance {
                return Err(Error::PointTooClose {
                    index: p,
                    distance: d,
                    required: clearance,
                });
            }
        }
        Ok(())
    }
}
