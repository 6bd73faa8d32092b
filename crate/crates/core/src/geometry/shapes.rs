//! Parameterised obstacles: the L-shaped corner wall and spheres.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::mesh::SurfaceMesh;
use super::vec3::{self, Vec3};
use crate::{Error, Result};

/// Physical and geometric description of a corner wall.
///
/// The outer corner of the L footprint sits at `origin_offset`; the arms run
/// along +x (`lengths[0]`) and +y (`lengths[1]`) and the wall occupies
/// `z ∈ [-height/2, height/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallParams {
    pub epsilon_r: f64,
    pub sigma: f64,
    pub thickness: f64,
    pub origin_offset: [f64; 2],
    pub lengths: [f64; 2],
    pub height: f64,
}

impl WallParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.epsilon_r >= 1.0
            && self.sigma >= 0.0
            && self.thickness > 0.0
            && self.lengths.iter().all(|&l| l > 0.0)
            && self.height > 0.0
            && self.origin_offset.iter().all(|v| v.is_finite());
        if !ok {
            return Err(Error::invalid(format!("wall parameters out of range: {self:?}")));
        }
        Ok(())
    }

    /// Same geometry?  (Meshes depend only on these fields.)
    pub fn same_geometry(&self, other: &WallParams) -> bool {
        self.thickness == other.thickness
            && self.origin_offset == other.origin_offset
            && self.lengths == other.lengths
            && self.height == other.height
    }

    /// Volume of the extruded L footprint.
    pub fn volume(&self) -> f64 {
        let t = self.thickness;
        (self.lengths[0] * t + self.lengths[1] * t - t * t) * self.height
    }
}

fn subdivide(breaks: &[f64], max_step: f64) -> Vec<f64> {
    let mut out = vec![breaks[0]];
    for w in breaks.windows(2) {
        let n = ((w[1] - w[0]) / max_step).ceil().max(1.0) as usize;
        for i in 1..=n {
            out.push(w[0] + (w[1] - w[0]) * i as f64 / n as f64);
        }
    }
    out
}

/// Watertight triangulation of the corner wall with every edge no longer
/// than `target_edge`.
pub fn build_corner_wall(params: &WallParams, target_edge: f64) -> Result<SurfaceMesh> {
    params.validate()?;
    if !(target_edge > 0.0) {
        return Err(Error::invalid("target edge must be positive"));
    }
    let t = params.thickness;
    let [l1, l2] = params.lengths;
    if t >= l1 || t >= l2 {
        return Err(Error::invalid(format!(
            "wall thickness {t} must be smaller than both arm lengths ({l1}, {l2})"
        )));
    }
    // Cell diagonals are the longest edges.
    let step = target_edge / std::f64::consts::SQRT_2;
    let xs = subdivide(&[0.0, t, l1], step);
    let ys = subdivide(&[0.0, t, l2], step);
    let zs = subdivide(&[-0.5 * params.height, 0.5 * params.height], step);
    let (nx, ny, nz) = (xs.len() - 1, ys.len() - 1, zs.len() - 1);

    let inside = |i: isize, j: isize| -> bool {
        if i < 0 || j < 0 || i >= nx as isize || j >= ny as isize {
            return false;
        }
        let cx = 0.5 * (xs[i as usize] + xs[i as usize + 1]);
        let cy = 0.5 * (ys[j as usize] + ys[j as usize + 1]);
        cx < t || cy < t
    };

    let [ox, oy] = params.origin_offset;
    let mut index: HashMap<(usize, usize, usize), usize> = HashMap::new();
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut vid = |i: usize, j: usize, k: usize| -> usize {
        *index.entry((i, j, k)).or_insert_with(|| {
            vertices.push([xs[i] + ox, ys[j] + oy, zs[k]]);
            vertices.len() - 1
        })
    };
    let mut triangles = Vec::new();

    for i in 0..nx {
        for j in 0..ny {
            if !inside(i as isize, j as isize) {
                continue;
            }
            // top (+z) and bottom (-z) caps
            let (a, b, c, d) = (vid(i, j, nz), vid(i + 1, j, nz), vid(i + 1, j + 1, nz), vid(i, j + 1, nz));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
            let (a, b, c, d) = (vid(i, j, 0), vid(i + 1, j, 0), vid(i + 1, j + 1, 0), vid(i, j + 1, 0));
            triangles.push([a, c, b]);
            triangles.push([a, d, c]);

            // side walls along boundary edges, traversed counter-clockwise
            let (ii, jj) = (i as isize, j as isize);
            let mut sides: Vec<((usize, usize), (usize, usize))> = Vec::new();
            if !inside(ii, jj - 1) {
                sides.push(((i, j), (i + 1, j)));
            }
            if !inside(ii + 1, jj) {
                sides.push(((i + 1, j), (i + 1, j + 1)));
            }
            if !inside(ii, jj + 1) {
                sides.push(((i + 1, j + 1), (i, j + 1)));
            }
            if !inside(ii - 1, jj) {
                sides.push(((i, j + 1), (i, j)));
            }
            for ((pi, pj), (qi, qj)) in sides {
                for k in 0..nz {
                    let p0 = vid(pi, pj, k);
                    let q0 = vid(qi, qj, k);
                    let q1 = vid(qi, qj, k + 1);
                    let p1 = vid(pi, pj, k + 1);
                    triangles.push([p0, q0, q1]);
                    triangles.push([p0, q1, p1]);
                }
            }
        }
    }
    SurfaceMesh::new(vertices, triangles)
}

/// Icosphere with every edge no longer than `target_edge` (vertices exactly
/// on the sphere).
pub fn build_sphere_mesh(radius: f64, center: Vec3, target_edge: f64) -> Result<SurfaceMesh> {
    if !(radius > 0.0) {
        return Err(Error::invalid("sphere radius must be positive"));
    }
    if !(target_edge > 0.0) {
        return Err(Error::invalid("target edge must be positive"));
    }
    let p = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = vec![
        [-1.0, p, 0.0],
        [1.0, p, 0.0],
        [-1.0, -p, 0.0],
        [1.0, -p, 0.0],
        [0.0, -1.0, p],
        [0.0, 1.0, p],
        [0.0, -1.0, -p],
        [0.0, 1.0, -p],
        [p, 0.0, -1.0],
        [p, 0.0, 1.0],
        [-p, 0.0, -1.0],
        [-p, 0.0, 1.0],
    ]
    .into_iter()
    .map(vec3::normalize)
    .collect();
    let mut tris: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let max_edge = |verts: &[Vec3], tris: &[[usize; 3]]| -> f64 {
        tris.iter()
            .map(|t| {
                let [a, b, c] = t.map(|v| verts[v]);
                vec3::dist(a, b).max(vec3::dist(b, c)).max(vec3::dist(c, a))
            })
            .fold(0.0, f64::max)
            * radius
    };
    let mut levels = 0;
    while max_edge(&verts, &tris) > target_edge {
        if levels >= 8 {
            return Err(Error::invalid(format!(
                "target edge {target_edge} needs more than 8 sphere refinements"
            )));
        }
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            *midpoint.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(vec3::normalize(vec3::scale(vec3::add(verts[a], verts[b]), 0.5)));
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(tris.len() * 4);
        for &[a, b, c] in &tris {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        tris = next;
        levels += 1;
    }
    let vertices = verts
        .into_iter()
        .map(|v| vec3::add(center, vec3::scale(v, radius)))
        .collect();
    let mesh = SurfaceMesh::new(vertices, tris)?;
    debug_assert!(mesh.signed_volume() > 0.0);
    Ok(mesh)
}
