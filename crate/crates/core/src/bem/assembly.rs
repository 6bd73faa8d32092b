//! Galerkin assembly of the boundary integral operators with continuous
//! piecewise-linear trial and test functions.

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;

use super::kernel::helmholtz_g_and_radial;
use super::quadrature::{shape, PairKind, PairRule, QuadratureConfig, TriangleRule};
use crate::geometry::vec3::{self, Vec3};
use crate::geometry::SurfaceMesh;
use crate::{Error, Result};

/// Largest admissible `|k| h` for the mesh resolution guard.
pub const RESOLUTION_LIMIT: f64 = 2.0;

const BATCH: usize = 64;

/// Dense Galerkin matrices of the single layer `V`, double layer `K`,
/// hypersingular `W` and the mass matrix `M` for one wavenumber. The adjoint
/// double layer is `Kᵀ`.
#[derive(Debug, Clone)]
pub struct CalderonBlocks {
    pub k: Complex64,
    pub v: Mat<Complex64>,
    pub k_dl: Mat<Complex64>,
    pub w: Mat<Complex64>,
    pub mass: Mat<f64>,
}

impl CalderonBlocks {
    pub fn dim(&self) -> usize {
        self.v.nrows()
    }

    pub fn adjoint_double_layer(&self) -> Mat<Complex64> {
        self.k_dl.transpose().to_owned()
    }

    /// Galerkin matrix of the Calderón operator `[[-K, V], [W, K']]`.
    pub fn calderon_matrix(&self) -> Mat<Complex64> {
        let n = self.dim();
        let mut a = Mat::<Complex64>::zeros(2 * n, 2 * n);
        self.add_calderon_to(&mut a, 0);
        a
    }

    /// Adds the Calderón matrix into `a`, with vertex numbering shifted by
    /// `offset` in both trace blocks of a system with `a.nrows() / 2`
    /// vertices.
    pub fn add_calderon_to(&self, a: &mut Mat<Complex64>, offset: usize) {
        let n = self.dim();
        let nn = a.nrows() / 2;
        for j in 0..n {
            for i in 0..n {
                let (r, c) = (offset + i, offset + j);
                a[(r, c)] -= self.k_dl[(i, j)];
                a[(r, nn + c)] += self.v[(i, j)];
                a[(nn + r, c)] += self.w[(i, j)];
                a[(nn + r, nn + c)] += self.k_dl[(j, i)];
            }
        }
    }
}

/// Per-triangle data needed by the assembly.
#[derive(Debug, Clone)]
pub(crate) struct Element {
    pub p: [Vec3; 3],
    pub v: [usize; 3],
    pub n: Vec3,
    pub area: f64,
    pub centroid: Vec3,
    pub diam: f64,
    /// Surface curl of each local shape function.
    pub curl: [Vec3; 3],
}

pub(crate) fn elements(mesh: &SurfaceMesh) -> Vec<Element> {
    (0..mesh.num_triangles())
        .map(|t| {
            let p = mesh.corners(t);
            let area = mesh.area(t);
            // curl_Γ λ_a = n × ∇_Γ λ_a = -(p_{a+2} - p_{a+1}) / (2A)
            let curl = std::array::from_fn(|a| vec3::scale(vec3::sub(p[(a + 2) % 3], p[(a + 1) % 3]), -0.5 / area));
            Element {
                p,
                v: mesh.triangles()[t],
                n: mesh.normal(t),
                area,
                centroid: mesh.centroid(t),
                diam: mesh.diameter(t),
                curl,
            }
        })
        .collect()
}

#[inline]
pub(crate) fn map_point(e: &Element, perm: &[usize; 3], s: [f64; 2]) -> Vec3 {
    let (p0, p1, p2) = (e.p[perm[0]], e.p[perm[1]], e.p[perm[2]]);
    [
        p0[0] + s[0] * (p1[0] - p0[0]) + s[1] * (p2[0] - p1[0]),
        p0[1] + s[0] * (p1[1] - p0[1]) + s[1] * (p2[1] - p1[1]),
        p0[2] + s[0] * (p1[2] - p0[2]) + s[1] * (p2[2] - p1[2]),
    ]
}

fn classify(a: &Element, b: &Element) -> (PairKind, [usize; 3], [usize; 3]) {
    let mut shared = Vec::with_capacity(3);
    for (i, vi) in a.v.iter().enumerate() {
        if let Some(j) = b.v.iter().position(|vj| vj == vi) {
            shared.push((i, j));
        }
    }
    match shared.len() {
        3 => (PairKind::Coincident, [0, 1, 2], [0, 1, 2]),
        2 => {
            let (i0, j0) = shared[0];
            let (i1, j1) = shared[1];
            (PairKind::Edge, [i0, i1, 3 - i0 - i1], [j0, j1, 3 - j0 - j1])
        }
        1 => {
            let (i, j) = shared[0];
            (PairKind::Vertex, [i, (i + 1) % 3, (i + 2) % 3], [j, (j + 1) % 3, (j + 2) % 3])
        }
        _ => (PairKind::Regular, [0, 1, 2], [0, 1, 2]),
    }
}

/// Local 3×3 integrals for one element pair (indexed by mesh-local vertex
/// order): `v`, `k` (double layer, test on the first element), `k_swap` (the
/// double layer with the roles of the elements exchanged, stored in the same
/// orientation) and the scalar `∫∫ G`.
#[derive(Default)]
struct Local {
    v: [[Complex64; 3]; 3],
    k: [[Complex64; 3]; 3],
    k_swap: [[Complex64; 3]; 3],
    g: Complex64,
}

fn integrate_pair(k: Complex64, a: &Element, b: &Element, rule: &PairRule, pa: &[usize; 3], pb: &[usize; 3]) -> Local {
    let mut out = Local::default();
    let jac = 4.0 * a.area * b.area;
    for q in 0..rule.len() {
        let x = map_point(a, pa, rule.x[q]);
        let y = map_point(b, pb, rule.y[q]);
        let d = vec3::sub(y, x);
        let r = vec3::norm(d);
        let (g, c) = helmholtz_g_and_radial(k, r);
        let w = rule.weights[q] * jac;
        let gw = g * w;
        let kw = c * (w * vec3::dot(d, b.n));
        let ksw = c * (-w * vec3::dot(d, a.n));
        let fx = shape(rule.x[q]);
        let fy = shape(rule.y[q]);
        out.g += gw;
        for i in 0..3 {
            for j in 0..3 {
                let f = fx[i] * fy[j];
                out.v[pa[i]][pb[j]] += gw * f;
                out.k[pa[i]][pb[j]] += kw * f;
                out.k_swap[pa[i]][pb[j]] += ksw * f;
            }
        }
    }
    out
}

/// Quadrature points of a triangle rule mapped onto one element.
struct ElementPoints {
    x: Vec<Vec3>,
    /// weight × Jacobian
    w: Vec<f64>,
    f: Vec<[f64; 3]>,
}

impl ElementPoints {
    fn new(e: &Element, rule: &TriangleRule) -> Self {
        Self {
            x: rule.points.iter().map(|p| map_point(e, &[0, 1, 2], *p)).collect(),
            w: rule.weights.iter().map(|w| w * 2.0 * e.area).collect(),
            f: rule.points.iter().map(|p| shape(*p)).collect(),
        }
    }
}

/// Tensor-rule integration of a pair of separated elements.
fn integrate_regular(k: Complex64, a: &Element, b: &Element, pa: &ElementPoints, pb: &ElementPoints) -> Local {
    let mut out = Local::default();
    for i in 0..pa.x.len() {
        let x = pa.x[i];
        let mut gv = [Complex64::default(); 3];
        let mut kv = [Complex64::default(); 3];
        let mut sv = [Complex64::default(); 3];
        for j in 0..pb.x.len() {
            let d = vec3::sub(pb.x[j], x);
            let r = vec3::norm(d);
            let (g, c) = helmholtz_g_and_radial(k, r);
            let w = pb.w[j];
            let gw = g * w;
            let kw = c * (w * vec3::dot(d, b.n));
            let sw = c * (-w * vec3::dot(d, a.n));
            let fy = pb.f[j];
            for m in 0..3 {
                gv[m] += gw * fy[m];
                kv[m] += kw * fy[m];
                sv[m] += sw * fy[m];
            }
        }
        let wx = pa.w[i];
        let fx = pa.f[i];
        out.g += (gv[0] + gv[1] + gv[2]) * wx;
        for l in 0..3 {
            let c = fx[l] * wx;
            for m in 0..3 {
                out.v[l][m] += gv[m] * c;
                out.k[l][m] += kv[m] * c;
                out.k_swap[l][m] += sv[m] * c;
            }
        }
    }
    out
}

struct Rules {
    coincident: PairRule,
    edge: PairRule,
    vertex: PairRule,
    near: TriangleRule,
    far: TriangleRule,
    near_factor: f64,
}

impl Rules {
    fn new(cfg: &QuadratureConfig) -> Self {
        let tri = |o: Option<usize>| o.map(TriangleRule::collapsed_gauss).unwrap_or_else(TriangleRule::dunavant6);
        let near = tri(cfg.near_order);
        let far = tri(cfg.far_order);
        Self {
            coincident: PairRule::sauter_schwab(PairKind::Coincident, cfg.singular_order),
            edge: PairRule::sauter_schwab(PairKind::Edge, cfg.singular_order),
            vertex: PairRule::sauter_schwab(PairKind::Vertex, cfg.singular_order),
            near,
            far,
            near_factor: cfg.near_factor,
        }
    }

    fn singular(&self, kind: PairKind) -> &PairRule {
        match kind {
            PairKind::Coincident => &self.coincident,
            PairKind::Edge => &self.edge,
            PairKind::Vertex => &self.vertex,
            PairKind::Regular => unreachable!("regular pairs use element rules"),
        }
    }

    fn is_near(&self, a: &Element, b: &Element) -> bool {
        vec3::dist(a.centroid, b.centroid) < self.near_factor * a.diam.max(b.diam)
    }
}

fn check_mesh(mesh: &SurfaceMesh, k: Complex64) -> Result<()> {
    let report = mesh.validate();
    if !report.watertight {
        return Err(Error::InvalidMesh(format!("{} boundary edges", report.boundary_edges)));
    }
    let h = mesh.max_edge();
    let kh = k.norm() * h;
    if kh > RESOLUTION_LIMIT {
        return Err(Error::ResolutionGuard {
            k: k.norm(),
            h,
            kh,
            limit: RESOLUTION_LIMIT,
        });
    }
    Ok(())
}

pub fn mass_matrix(mesh: &SurfaceMesh) -> Mat<f64> {
    let n = mesh.num_vertices();
    let mut m = Mat::<f64>::zeros(n, n);
    for t in 0..mesh.num_triangles() {
        let v = mesh.triangles()[t];
        let a = mesh.area(t);
        for i in 0..3 {
            for j in 0..3 {
                m[(v[i], v[j])] += if i == j { a / 6.0 } else { a / 12.0 };
            }
        }
    }
    m
}

/// Assembles `V`, `K`, `W` and `M` on `mesh` for wavenumber `k`.
///
/// Only pairs `(τ, σ)` with `σ ≥ τ` are integrated; the lower triangle is
/// filled by symmetry, so `V` and `W` are symmetric to rounding and the
/// adjoint double layer is exactly `Kᵀ`.
pub fn assemble_calderon(mesh: &SurfaceMesh, k: Complex64, quad: &QuadratureConfig) -> Result<CalderonBlocks> {
    check_mesh(mesh, k)?;
    let elems = elements(mesh);
    let rules = Rules::new(quad);
    let near_pts: Vec<ElementPoints> = elems.iter().map(|e| ElementPoints::new(e, &rules.near)).collect();
    let far_pts: Vec<ElementPoints> = elems.iter().map(|e| ElementPoints::new(e, &rules.far)).collect();
    let n = mesh.num_vertices();
    let nt = elems.len();
    let k2 = k * k;

    // upper contributions (σ > τ) and coincident contributions, row-major
    let mut v_up = vec![Complex64::default(); n * n];
    let mut w_up = vec![Complex64::default(); n * n];
    let mut k_up = vec![Complex64::default(); n * n];
    let mut ks_up = vec![Complex64::default(); n * n];
    let mut v_diag = vec![Complex64::default(); n * n];
    let mut w_diag = vec![Complex64::default(); n * n];

    for start in (0..nt).step_by(BATCH) {
        let end = (start + BATCH).min(nt);
        let strips: Vec<_> = (start..end)
            .into_par_iter()
            .map(|t| {
                let a = &elems[t];
                let mut strip = vec![[Complex64::default(); 4]; 3 * n];
                let mut diag = ([[Complex64::default(); 3]; 3], [[Complex64::default(); 3]; 3]);
                for (s, b) in elems.iter().enumerate().skip(t) {
                    let (kind, pa, pb) = classify(a, b);
                    let loc = match kind {
                        PairKind::Regular if rules.is_near(a, b) => integrate_regular(k, a, b, &near_pts[t], &near_pts[s]),
                        PairKind::Regular => integrate_regular(k, a, b, &far_pts[t], &far_pts[s]),
                        _ => integrate_pair(k, a, b, rules.singular(kind), &pa, &pb),
                    };
                    let nn = vec3::dot(a.n, b.n);
                    for i in 0..3 {
                        for j in 0..3 {
                            let cc = vec3::dot(a.curl[i], b.curl[j]);
                            let w = loc.g * cc - k2 * nn * loc.v[i][j];
                            if s == t {
                                diag.0[i][j] = loc.v[i][j];
                                diag.1[i][j] = w;
                                // the double layer vanishes on a flat element
                            } else {
                                let e = &mut strip[i * n + b.v[j]];
                                e[0] += loc.v[i][j];
                                e[1] += w;
                                e[2] += loc.k[i][j];
                                e[3] += loc.k_swap[i][j];
                            }
                        }
                    }
                }
                (strip, diag)
            })
            .collect();
        for (t, (strip, diag)) in (start..end).zip(strips) {
            let vt = elems[t].v;
            for i in 0..3 {
                let row = vt[i] * n;
                for c in 0..n {
                    let e = strip[i * n + c];
                    v_up[row + c] += e[0];
                    w_up[row + c] += e[1];
                    k_up[row + c] += e[2];
                    ks_up[row + c] += e[3];
                }
                for j in 0..3 {
                    v_diag[row + vt[j]] += diag.0[i][j];
                    w_diag[row + vt[j]] += diag.1[i][j];
                }
            }
        }
    }

    let sym = |up: &[Complex64], dg: &[Complex64]| {
        Mat::from_fn(n, n, |i, j| up[i * n + j] + up[j * n + i] + 0.5 * (dg[i * n + j] + dg[j * n + i]))
    };
    let v = sym(&v_up, &v_diag);
    let w = sym(&w_up, &w_diag);
    let k_dl = Mat::from_fn(n, n, |i, j| k_up[i * n + j] + ks_up[j * n + i]);
    Ok(CalderonBlocks {
        k,
        v,
        k_dl,
        w,
        mass: mass_matrix(mesh),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_sphere_mesh;

    fn max_abs(m: &Mat<Complex64>) -> f64 {
        let mut x: f64 = 0.0;
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                x = x.max(m[(i, j)].norm());
            }
        }
        x
    }

    #[test]
    fn symmetry_and_adjoint() {
        let mesh = build_sphere_mesh(1.0, [0.0; 3], 0.7).unwrap();
        let b = assemble_calderon(&mesh, Complex64::new(1.3, 0.1), &QuadratureConfig::default()).unwrap();
        let vt = b.v.transpose().to_owned();
        assert!(max_abs(&(&b.v - &vt)) <= 1e-10 * max_abs(&b.v));
        let wt = b.w.transpose().to_owned();
        assert!(max_abs(&(&b.w - &wt)) <= 1e-10 * max_abs(&b.w));
        let kp = b.adjoint_double_layer();
        assert_eq!(kp[(3, 7)], b.k_dl[(7, 3)]);
    }

    #[test]
    fn laplace_double_layer_of_constant() {
        // ∫ ∂G/∂n_y dy = -1/2 on a closed surface, so K·1 = -M·1 / 2
        let mesh = build_sphere_mesh(1.0, [0.0; 3], 0.35).unwrap();
        let b = assemble_calderon(&mesh, Complex64::new(0.0, 0.0), &QuadratureConfig::default()).unwrap();
        let n = b.dim();
        let mut err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..n {
            let row: Complex64 = (0..n).map(|j| b.k_dl[(i, j)]).sum();
            let m: f64 = (0..n).map(|j| b.mass[(i, j)]).sum();
            err = err.max((row + 0.5 * m).norm());
            scale = scale.max(m);
        }
        assert!(err < 1e-3 * scale, "{err} vs {scale}");
    }

    #[test]
    fn hypersingular_annihilates_constants_for_laplace() {
        let mesh = build_sphere_mesh(1.0, [0.0; 3], 0.7).unwrap();
        let b = assemble_calderon(&mesh, Complex64::new(0.0, 0.0), &QuadratureConfig::default()).unwrap();
        let n = b.dim();
        for i in 0..n {
            let row: Complex64 = (0..n).map(|j| b.w[(i, j)]).sum();
            assert!(row.norm() < 1e-12 * max_abs(&b.w) * n as f64);
        }
    }

    #[test]
    fn small_wavenumber_single_layer_tends_to_laplace() {
        let mesh = build_sphere_mesh(1.0, [0.0; 3], 0.7).unwrap();
        let q = QuadratureConfig::default();
        let l = assemble_calderon(&mesh, Complex64::new(0.0, 0.0), &q).unwrap();
        let h = assemble_calderon(&mesh, Complex64::new(1e-4, 0.0), &q).unwrap();
        let d = &h.v - &l.v;
        // V_k - V_0 ≈ ik/(4π) (∫φ_i)(∫φ_j) for small k
        assert!(max_abs(&d) < 1e-4 * max_abs(&l.v));
    }

    #[test]
    fn resolution_guard_and_open_mesh() {
        let mesh = build_sphere_mesh(1.0, [0.0; 3], 0.7).unwrap();
        let err = assemble_calderon(&mesh, Complex64::new(40.0, 0.0), &QuadratureConfig::default());
        assert!(matches!(err, Err(Error::ResolutionGuard { .. })));
        let open = mesh.without_triangle(0);
        let err = assemble_calderon(&open, Complex64::new(1.0, 0.0), &QuadratureConfig::default());
        assert!(matches!(err, Err(Error::InvalidMesh(_))));
    }
}
