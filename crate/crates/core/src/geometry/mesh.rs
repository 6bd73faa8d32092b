use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use super::vec3::{self, Vec3};
use crate::{Error, Result};

/// Minimum admissible triangle area (m²).
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

/// Closed triangulated surface. Triangles are stored counter-clockwise when
/// seen from outside, so the right-hand normal points out of the obstacle.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    normals: Vec<Vec3>,
    areas: Vec<f64>,
}

/// Outcome of [`SurfaceMesh::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub watertight: bool,
    pub orientation_consistent: bool,
    pub outward: bool,
    pub min_area: f64,
    pub max_edge: f64,
    pub volume: f64,
    pub boundary_edges: usize,
}

impl ValidationReport {
    pub fn passes(&self) -> bool {
        self.watertight && self.orientation_consistent && self.outward && self.min_area > MIN_TRIANGLE_AREA
    }
}

impl SurfaceMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!("triangle {t} references a missing vertex")));
            }
        }
        let mut normals = Vec::with_capacity(triangles.len());
        let mut areas = Vec::with_capacity(triangles.len());
        for tri in &triangles {
            let [a, b, c] = tri.map(|v| vertices[v]);
            let n = vec3::cross(vec3::sub(b, a), vec3::sub(c, a));
            let twice_area = vec3::norm(n);
            areas.push(0.5 * twice_area);
            normals.push(if twice_area > 0.0 {
                vec3::scale(n, 1.0 / twice_area)
            } else {
                [0.0; 3]
            });
        }
        Ok(Self {
            vertices,
            triangles,
            normals,
            areas,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn normal(&self, t: usize) -> Vec3 {
        self.normals[t]
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, t: usize) -> [Vec3; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn centroid(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.corners(t);
        vec3::scale(vec3::add(a, vec3::add(b, c)), 1.0 / 3.0)
    }

    /// Longest edge of triangle `t`.
    pub fn diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        vec3::dist(a, b).max(vec3::dist(b, c)).max(vec3::dist(c, a))
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn max_edge(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.diameter(t)).fold(0.0, f64::max)
    }

    /// Signed enclosed volume by the divergence theorem.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|tri| {
                let [a, b, c] = tri.map(|v| self.vertices[v]);
                vec3::dot(a, vec3::cross(b, c)) / 6.0
            })
            .sum()
    }

    /// Smallest distance from `p` to the surface.
    pub fn distance_to(&self, p: Vec3) -> f64 {
        (0..self.num_triangles())
            .map(|t| {
                let [a, b, c] = self.corners(t);
                vec3::point_triangle_distance(p, a, b, c)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Generalised winding number: ≈1 inside, ≈0 outside a closed surface.
    pub fn winding_number(&self, p: Vec3) -> f64 {
        let mut omega = 0.0;
        for t in 0..self.num_triangles() {
            let [a, b, c] = self.corners(t).map(|v| vec3::sub(v, p));
            let (la, lb, lc) = (vec3::norm(a), vec3::norm(b), vec3::norm(c));
            let num = vec3::dot(a, vec3::cross(b, c));
            let den = la * lb * lc + vec3::dot(a, b) * lc + vec3::dot(b, c) * la + vec3::dot(c, a) * lb;
            omega += 2.0 * num.atan2(den);
        }
        omega / (4.0 * std::f64::consts::PI)
    }

    pub fn contains(&self, p: Vec3) -> bool {
        self.winding_number(p) > 0.5
    }

    pub fn translated(&self, offset: Vec3) -> Self {
        let vertices = self.vertices.iter().map(|&v| vec3::add(v, offset)).collect();
        Self {
            vertices,
            triangles: self.triangles.clone(),
            normals: self.normals.clone(),
            areas: self.areas.clone(),
        }
    }

    /// Disjoint union of several closed surfaces; vertex indices of later
    /// meshes are shifted past the earlier ones.
    pub fn union(meshes: &[&SurfaceMesh]) -> Self {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        let mut normals = Vec::new();
        let mut areas = Vec::new();
        for m in meshes {
            let base = vertices.len();
            vertices.extend_from_slice(&m.vertices);
            triangles.extend(m.triangles.iter().map(|t| t.map(|v| v + base)));
            normals.extend_from_slice(&m.normals);
            areas.extend_from_slice(&m.areas);
        }
        Self {
            vertices,
            triangles,
            normals,
            areas,
        }
    }

    pub fn validate(&self) -> ValidationReport {
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                *directed.entry((tri[k], tri[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        let mut undirected: HashMap<(usize, usize), usize> = HashMap::new();
        for (&(a, b), &n) in &directed {
            *undirected.entry((a.min(b), a.max(b))).or_insert(0) += n;
        }
        let boundary_edges = undirected.values().filter(|&&n| n != 2).count();
        let watertight = boundary_edges == 0;
        let orientation_consistent = directed
            .iter()
            .all(|(&(a, b), &n)| n == 1 && directed.get(&(b, a)) == Some(&1));
        let volume = self.signed_volume();
        ValidationReport {
            watertight,
            orientation_consistent,
            outward: volume > 0.0,
            min_area: self.areas.iter().copied().fold(f64::INFINITY, f64::min),
            max_edge: self.max_edge(),
            volume,
            boundary_edges,
        }
    }

    /// Remove triangle `t` (for tests of the validator).
    pub fn without_triangle(&self, t: usize) -> Self {
        let mut tris = self.triangles.clone();
        tris.remove(t);
        Self::new(self.vertices.clone(), tris).expect("indices unchanged")
    }

    /// Reverse the orientation of triangle `t`.
    pub fn with_flipped_triangle(&self, t: usize) -> Self {
        let mut tris = self.triangles.clone();
        tris[t].swap(1, 2);
        Self::new(self.vertices.clone(), tris).expect("indices unchanged")
    }

    pub fn write_off(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "OFF")?;
        writeln!(w, "{} {} 0", self.vertices.len(), self.triangles.len())?;
        for v in &self.vertices {
            writeln!(w, "{:.17e} {:.17e} {:.17e}", v[0], v[1], v[2])?;
        }
        for t in &self.triangles {
            writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }

    pub fn read_off(path: impl AsRef<Path>) -> Result<Self> {
        let reader = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut tokens = Vec::new();
        for line in reader.lines() {
            let line = line?;
            let line = line.split('#').next().unwrap_or("");
            tokens.extend(line.split_whitespace().map(str::to_owned));
        }
        let mut it = tokens.into_iter();
        if it.next().as_deref() != Some("OFF") {
            return Err(Error::Format("missing OFF header".into()));
        }
        let mut next_num = |what: &str| -> Result<String> {
            it.next().ok_or_else(|| Error::Format(format!("unexpected end of file reading {what}")))
        };
        let parse_usize = |s: String| s.parse::<usize>().map_err(|e| Error::Format(e.to_string()));
        let parse_f64 = |s: String| s.parse::<f64>().map_err(|e| Error::Format(e.to_string()));
        let nv = parse_usize(next_num("counts")?)?;
        let nf = parse_usize(next_num("counts")?)?;
        let _ne = next_num("counts")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let x = parse_f64(next_num("vertex")?)?;
            let y = parse_f64(next_num("vertex")?)?;
            let z = parse_f64(next_num("vertex")?)?;
            vertices.push([x, y, z]);
        }
        let mut triangles = Vec::with_capacity(nf);
        for _ in 0..nf {
            if parse_usize(next_num("face")?)? != 3 {
                return Err(Error::Format("only triangular faces are supported".into()));
            }
            let a = parse_usize(next_num("face")?)?;
            let b = parse_usize(next_num("face")?)?;
            let c = parse_usize(next_num("face")?)?;
            triangles.push([a, b, c]);
        }
        Self::new(vertices, triangles)
    }
}
