//! Layer potentials off the surface and incident-field moments.

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;

use super::assembly::{elements, map_point, Element};
use super::kernel::helmholtz_g_and_radial;
use super::quadrature::{shape, TriangleRule};
use crate::geometry::vec3::{self, Vec3};
use crate::geometry::SurfaceMesh;
use crate::{Error, Result};

const IDENTITY: [usize; 3] = [0, 1, 2];

/// Rules used for surface integrals against a fixed off-surface point.
pub(crate) struct PointRules {
    near: TriangleRule,
    far: TriangleRule,
}

impl PointRules {
    pub fn new() -> Self {
        Self {
            near: TriangleRule::collapsed_gauss(8),
            far: TriangleRule::dunavant6(),
        }
    }

    fn pick(&self, e: &Element, x: Vec3) -> &TriangleRule {
        if vec3::dist(e.centroid, x) < 3.0 * e.diam {
            &self.near
        } else {
            &self.far
        }
    }
}

/// Checks that `x` is outside the surface and further than the size of the
/// nearest element from it.
pub(crate) fn check_clearance(mesh: &SurfaceMesh, elems: &[Element], index: usize, x: Vec3) -> Result<()> {
    let mut best = (f64::INFINITY, 0.0);
    for e in elems {
        let d = vec3::point_triangle_distance(x, e.p[0], e.p[1], e.p[2]);
        if d < best.0 {
            best = (d, e.diam);
        }
    }
    if best.0 <= best.1 || mesh.contains(x) {
        return Err(Error::PointTooClose {
            index,
            distance: best.0,
            required: best.1,
        });
    }
    Ok(())
}

/// Single- and double-layer rows for one point `x`:
/// `s_j = ∫ G(x, y) φ_j(y) dy`, `d_j = ∫ ∂G(x, y)/∂n_y φ_j(y) dy`.
fn rows_at(k: Complex64, elems: &[Element], rules: &PointRules, x: Vec3, n: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut s = vec![Complex64::default(); n];
    let mut d = vec![Complex64::default(); n];
    for e in elems {
        let rule = rules.pick(e, x);
        let jac = 2.0 * e.area;
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let y = map_point(e, &IDENTITY, *p);
            let dy = vec3::sub(y, x);
            let (g, c) = helmholtz_g_and_radial(k, vec3::norm(dy));
            let w = w * jac;
            let dn = c * (w * vec3::dot(dy, e.n));
            let f = shape(*p);
            for a in 0..3 {
                s[e.v[a]] += g * (w * f[a]);
                d[e.v[a]] += dn * f[a];
            }
        }
    }
    (s, d)
}

/// Row matrices of the single and double layer potentials at `points`
/// (`points.len() × num_vertices` each).
pub fn layer_potential_rows(mesh: &SurfaceMesh, k: Complex64, points: &[Vec3]) -> Result<(Mat<Complex64>, Mat<Complex64>)> {
    let elems = elements(mesh);
    for (i, &x) in points.iter().enumerate() {
        check_clearance(mesh, &elems, i, x)?;
    }
    let rules = PointRules::new();
    let n = mesh.num_vertices();
    let rows: Vec<_> = points.par_iter().map(|&x| rows_at(k, &elems, &rules, x, n)).collect();
    let sl = Mat::from_fn(points.len(), n, |i, j| rows[i].0[j]);
    let dl = Mat::from_fn(points.len(), n, |i, j| rows[i].1[j]);
    Ok((sl, dl))
}

/// Moments `⟨γ G0(·, s), φ_i⟩` of the Cauchy traces of point sources, one
/// column per source: rows `0..n` hold the Dirichlet part, `n..2n` the
/// Neumann part.
pub fn point_source_moments(mesh: &SurfaceMesh, k: Complex64, sources: &[Vec3]) -> Result<Mat<Complex64>> {
    let (sl, dl) = layer_potential_rows(mesh, k, sources)?;
    let n = mesh.num_vertices();
    Ok(Mat::from_fn(2 * n, sources.len(), |i, j| if i < n { sl[(j, i)] } else { dl[(j, i - n)] }))
}

/// Moments of the Cauchy traces of the plane wave `e^{ik d·x}`.
pub fn plane_wave_moments(mesh: &SurfaceMesh, k: Complex64, direction: Vec3) -> Mat<Complex64> {
    let elems = elements(mesh);
    let rule = TriangleRule::collapsed_gauss(6);
    let n = mesh.num_vertices();
    let dir = vec3::normalize(direction);
    let mut b = Mat::<Complex64>::zeros(2 * n, 1);
    for e in &elems {
        let jac = 2.0 * e.area;
        let dn = vec3::dot(dir, e.n);
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let x = map_point(e, &IDENTITY, *p);
            let u = (Complex64::i() * k * vec3::dot(dir, x)).exp();
            let f = shape(*p);
            for a in 0..3 {
                let wf = w * jac * f[a];
                b[(e.v[a], 0)] += u * wf;
                b[(n + e.v[a], 0)] += Complex64::i() * k * dn * u * wf;
            }
        }
    }
    b
}

/// Field of the representation formula `U(x) = ∫ ∂G/∂n_y γ0 - ∫ G γ1`
/// for the exterior Cauchy traces of a radiating field.
pub fn evaluate_from_rows(sl: &Mat<Complex64>, dl: &Mat<Complex64>, dirichlet: &[Complex64], neumann: &[Complex64]) -> Vec<Complex64> {
    (0..sl.nrows())
        .map(|i| {
            let mut u = Complex64::default();
            for j in 0..sl.ncols() {
                u += dl[(i, j)] * dirichlet[j] - sl[(i, j)] * neumann[j];
            }
            u
        })
        .collect()
}
