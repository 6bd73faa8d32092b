//! Transmission solves with cached dense LU factorisations.
//!
//! Unknowns are the exterior Cauchy traces of the total field, Dirichlet
//! coefficients first, then Neumann. The incident traces are taken as the
//! solution of the discrete exterior problem `2 A0 c = b`; they satisfy the
//! discrete Calderón identity exactly, so an obstacle without contrast
//! produces no scattered field and the discrete Green's function is
//! reciprocal.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;
use num_complex::Complex64;

use super::assembly::{assemble_calderon, CalderonBlocks};
use super::kernel::complex_wavenumber;
use super::potentials::{evaluate_from_rows, layer_potential_rows, point_source_moments};
use super::quadrature::QuadratureConfig;
use crate::geometry::{SurfaceMesh, Vec3};
use crate::{Error, Result, C0};

/// Dirichlet and Neumann coefficient vectors of a pair of traces.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyTraces {
    pub dirichlet: Vec<Complex64>,
    pub neumann: Vec<Complex64>,
}

impl CauchyTraces {
    pub fn zeros(n: usize) -> Self {
        Self {
            dirichlet: vec![Complex64::default(); n],
            neumann: vec![Complex64::default(); n],
        }
    }

    fn from_column(x: &Mat<Complex64>, col: usize) -> Self {
        let n = x.nrows() / 2;
        Self {
            dirichlet: (0..n).map(|i| x[(i, col)]).collect(),
            neumann: (0..n).map(|i| x[(n + i, col)]).collect(),
        }
    }

    fn to_column(&self) -> Mat<Complex64> {
        let n = self.dirichlet.len();
        Mat::from_fn(2 * n, 1, |i, _| if i < n { self.dirichlet[i] } else { self.neumann[i - n] })
    }
}

/// One or more disjoint closed obstacles treated as a single scatterer.
#[derive(Debug, Clone)]
pub struct BemScene {
    mesh: SurfaceMesh,
    bodies: Vec<(usize, SurfaceMesh)>,
}

impl BemScene {
    pub fn single(mesh: SurfaceMesh) -> Self {
        Self {
            bodies: vec![(0, mesh.clone())],
            mesh,
        }
    }

    pub fn multi(meshes: Vec<SurfaceMesh>) -> Result<Self> {
        if meshes.is_empty() {
            return Err(Error::invalid("scene needs at least one body"));
        }
        let refs: Vec<&SurfaceMesh> = meshes.iter().collect();
        let mesh = SurfaceMesh::union(&refs);
        let mut offset = 0;
        let mut bodies = Vec::with_capacity(meshes.len());
        for m in meshes {
            let n = m.num_vertices();
            bodies.push((offset, m));
            offset += n;
        }
        Ok(Self { mesh, bodies })
    }

    pub fn mesh(&self) -> &SurfaceMesh {
        &self.mesh
    }

    pub fn num_bodies(&self) -> usize {
        self.bodies.len()
    }

    pub fn num_unknowns(&self) -> usize {
        2 * self.mesh.num_vertices()
    }
}

fn factorize(a: &Mat<Complex64>, omega: f64) -> Result<PartialPivLu<Complex64>> {
    let lu = a.partial_piv_lu();
    let u = lu.U();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..u.nrows() {
        let d = u[(i, i)].norm();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    let condition = hi / lo;
    if !condition.is_finite() || condition > 1e14 {
        return Err(Error::SingularSystem {
            frequency: omega / (2.0 * std::f64::consts::PI),
            condition,
        });
    }
    Ok(lu)
}

/// The free-space part of the system at one frequency. Independent of the
/// obstacle material, so it is shared by every parameter value.
pub struct ExteriorSystem {
    omega: f64,
    k0: Complex64,
    scene: Arc<BemScene>,
    quad: QuadratureConfig,
    a0: Mat<Complex64>,
    lu_free: PartialPivLu<Complex64>,
    factorizations: AtomicUsize,
}

impl ExteriorSystem {
    pub fn new(scene: Arc<BemScene>, omega: f64, quad: QuadratureConfig) -> Result<Self> {
        Self::with_wavenumber(scene, omega, Complex64::new(omega / C0, 0.0), quad)
    }

    /// Exterior system for an arbitrary background wavenumber; `omega` is
    /// only used as a tag.
    pub fn with_wavenumber(scene: Arc<BemScene>, omega: f64, k0: Complex64, quad: QuadratureConfig) -> Result<Self> {
        let blocks = assemble_calderon(scene.mesh(), k0, &quad)?;
        let a0 = blocks.calderon_matrix();
        let a2 = Mat::from_fn(a0.nrows(), a0.ncols(), |i, j| a0[(i, j)] * 2.0);
        let lu_free = factorize(&a2, omega)?;
        Ok(Self {
            omega,
            k0,
            scene,
            quad,
            a0,
            lu_free,
            factorizations: AtomicUsize::new(0),
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn k0(&self) -> Complex64 {
        self.k0
    }

    pub fn scene(&self) -> &BemScene {
        &self.scene
    }

    /// Number of combined-system factorisations performed with this
    /// exterior system.
    pub fn factorizations(&self) -> usize {
        self.factorizations.load(Ordering::Relaxed)
    }

    /// Factorises `A(k0) + A(kD)` with one interior wavenumber per body.
    pub fn factorize(&self, kd: &[Complex64]) -> Result<FactorizedSystem> {
        if kd.len() != self.scene.num_bodies() {
            return Err(Error::DimensionMismatch {
                expected: self.scene.num_bodies(),
                got: kd.len(),
            });
        }
        let mut a = self.a0.clone();
        for ((offset, mesh), &k) in self.scene.bodies.iter().zip(kd) {
            let blocks = assemble_calderon(mesh, k, &self.quad)?;
            blocks.add_calderon_to(&mut a, *offset);
        }
        self.factorize_matrix(a, kd.to_vec())
    }

    /// Same as [`factorize`](Self::factorize) for media given by relative
    /// permittivity and conductivity.
    pub fn factorize_media(&self, media: &[(f64, f64)]) -> Result<FactorizedSystem> {
        let kd: Vec<Complex64> = media.iter().map(|&(e, s)| complex_wavenumber(self.omega, e, s)).collect();
        self.factorize(&kd)
    }

    /// Factorises with precomputed interior blocks (single-body scenes).
    pub fn factorize_blocks(&self, interior: &CalderonBlocks) -> Result<FactorizedSystem> {
        if self.scene.num_bodies() != 1 || interior.dim() != self.scene.mesh().num_vertices() {
            return Err(Error::DimensionMismatch {
                expected: self.scene.mesh().num_vertices(),
                got: interior.dim(),
            });
        }
        let mut a = self.a0.clone();
        interior.add_calderon_to(&mut a, 0);
        self.factorize_matrix(a, vec![interior.k])
    }

    fn factorize_matrix(&self, a: Mat<Complex64>, kd: Vec<Complex64>) -> Result<FactorizedSystem> {
        let lu = factorize(&a, self.omega)?;
        self.factorizations.fetch_add(1, Ordering::Relaxed);
        Ok(FactorizedSystem {
            omega: self.omega,
            kd,
            matrix: a,
            lu,
        })
    }

    /// Discrete incident traces `(2 A0)⁻¹ b` for moment columns `b`.
    pub fn incident_traces(&self, b: &Mat<Complex64>) -> Mat<Complex64> {
        self.lu_free.solve(b)
    }

    /// Moments of point sources at `sources` (one column each).
    pub fn point_source_moments(&self, sources: &[Vec3]) -> Result<Mat<Complex64>> {
        point_source_moments(self.scene.mesh(), self.k0, sources)
    }

    /// Single- and double-layer rows at `points`.
    pub fn potential_rows(&self, points: &[Vec3]) -> Result<PotentialRows> {
        let (sl, dl) = layer_potential_rows(self.scene.mesh(), self.k0, points)?;
        Ok(PotentialRows { sl, dl })
    }

    /// Scattered Cauchy traces for moment columns `b`: total minus incident.
    pub fn scattered_traces(&self, system: &FactorizedSystem, b: &Mat<Complex64>) -> Result<Mat<Complex64>> {
        if (system.omega - self.omega).abs() > 1e-9 * self.omega.abs().max(1.0) {
            return Err(Error::FrequencyMismatch(system.omega, self.omega));
        }
        let total = system.solve(b);
        let inc = self.incident_traces(b);
        Ok(&total - &inc)
    }
}

/// LU factorisation of the combined system at one frequency and material.
pub struct FactorizedSystem {
    omega: f64,
    kd: Vec<Complex64>,
    matrix: Mat<Complex64>,
    lu: PartialPivLu<Complex64>,
}

impl FactorizedSystem {
    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn interior_wavenumbers(&self) -> &[Complex64] {
        &self.kd
    }

    pub fn matrix(&self) -> &Mat<Complex64> {
        &self.matrix
    }

    pub fn solve(&self, b: &Mat<Complex64>) -> Mat<Complex64> {
        self.lu.solve(b)
    }
}

/// Layer-potential rows at a fixed set of exterior points.
pub struct PotentialRows {
    pub sl: Mat<Complex64>,
    pub dl: Mat<Complex64>,
}

impl PotentialRows {
    /// Scattered field at the points for each column of scattered traces.
    pub fn apply(&self, traces: &Mat<Complex64>) -> Mat<Complex64> {
        let n = self.sl.ncols();
        let t0 = traces.subrows(0, n);
        let t1 = traces.subrows(n, n);
        &self.dl * t0 - &self.sl * t1
    }
}

/// Total and scattered exterior traces of a transmission solve.
#[derive(Debug, Clone)]
pub struct TransmissionSolution {
    pub total: CauchyTraces,
    pub scattered: CauchyTraces,
}

/// Solves the transmission problem for one obstacle with incident moments
/// `incident` (`⟨γ u_in, φ_i⟩`).
pub fn solve_transmission(
    mesh: &SurfaceMesh,
    k0: Complex64,
    kd: Complex64,
    incident: &CauchyTraces,
    quad: &QuadratureConfig,
) -> Result<TransmissionSolution> {
    let n = mesh.num_vertices();
    if incident.dirichlet.len() != n || incident.neumann.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: incident.dirichlet.len(),
        });
    }
    let ext = ExteriorSystem::with_wavenumber(Arc::new(BemScene::single(mesh.clone())), k0.re * C0, k0, *quad)?;
    let sys = ext.factorize(&[kd])?;
    let b = incident.to_column();
    let total = sys.solve(&b);
    let scattered = &total - &ext.incident_traces(&b);
    Ok(TransmissionSolution {
        total: CauchyTraces::from_column(&total, 0),
        scattered: CauchyTraces::from_column(&scattered, 0),
    })
}

/// Scattered field at `points` from the scattered exterior traces.
pub fn evaluate_representation(mesh: &SurfaceMesh, scattered: &CauchyTraces, k0: Complex64, points: &[Vec3]) -> Result<Vec<Complex64>> {
    let (sl, dl) = layer_potential_rows(mesh, k0, points)?;
    Ok(evaluate_from_rows(&sl, &dl, &scattered.dirichlet, &scattered.neumann))
}

/// Scattered field at `points` for a unit point source at `source`.
pub fn scattered_field_point_source(
    mesh: &SurfaceMesh,
    k0: Complex64,
    kd: Complex64,
    source: Vec3,
    points: &[Vec3],
    quad: &QuadratureConfig,
) -> Result<Vec<Complex64>> {
    let ext = ExteriorSystem::with_wavenumber(Arc::new(BemScene::single(mesh.clone())), k0.re * C0, k0, *quad)?;
    let sys = ext.factorize(&[kd])?;
    let b = ext.point_source_moments(&[source])?;
    let y = ext.scattered_traces(&sys, &b)?;
    let rows = ext.potential_rows(points)?;
    let u = rows.apply(&y);
    Ok((0..points.len()).map(|i| u[(i, 0)]).collect())
}

/// Caches exterior systems by frequency and combined factorisations by
/// frequency and material, so repeated right-hand sides reuse one LU.
pub struct BemSolver {
    scene: Arc<BemScene>,
    quad: QuadratureConfig,
    exterior: Mutex<HashMap<u64, Arc<ExteriorSystem>>>,
    systems: Mutex<HashMap<(u64, Vec<(u64, u64)>), Arc<FactorizedSystem>>>,
}

impl BemSolver {
    pub fn new(scene: BemScene, quad: QuadratureConfig) -> Self {
        Self {
            scene: Arc::new(scene),
            quad,
            exterior: Mutex::new(HashMap::new()),
            systems: Mutex::new(HashMap::new()),
        }
    }

    pub fn scene(&self) -> &BemScene {
        &self.scene
    }

    pub fn exterior(&self, omega: f64) -> Result<Arc<ExteriorSystem>> {
        if let Some(e) = self.exterior.lock().unwrap().get(&omega.to_bits()) {
            return Ok(e.clone());
        }
        let e = Arc::new(ExteriorSystem::new(self.scene.clone(), omega, self.quad)?);
        self.exterior.lock().unwrap().insert(omega.to_bits(), e.clone());
        Ok(e)
    }

    pub fn system(&self, omega: f64, media: &[(f64, f64)]) -> Result<Arc<FactorizedSystem>> {
        let key = (omega.to_bits(), media.iter().map(|&(e, s)| (e.to_bits(), s.to_bits())).collect::<Vec<_>>());
        if let Some(s) = self.systems.lock().unwrap().get(&key) {
            return Ok(s.clone());
        }
        let s = Arc::new(self.exterior(omega)?.factorize_media(media)?);
        self.systems.lock().unwrap().insert(key, s.clone());
        Ok(s)
    }

    /// Drops cached factorisations (exterior systems are kept).
    pub fn clear_systems(&self) {
        self.systems.lock().unwrap().clear();
    }

    /// Total number of combined-system factorisations so far.
    pub fn factorizations(&self) -> usize {
        self.exterior.lock().unwrap().values().map(|e| e.factorizations()).sum()
    }

    /// Scattered field at `points` for point sources at `sources`
    /// (`points.len() × sources.len()`).
    pub fn scattered_field(&self, omega: f64, media: &[(f64, f64)], sources: &[Vec3], points: &[Vec3]) -> Result<Mat<Complex64>> {
        let ext = self.exterior(omega)?;
        let sys = self.system(omega, media)?;
        let b = ext.point_source_moments(sources)?;
        let y = ext.scattered_traces(&sys, &b)?;
        Ok(ext.potential_rows(points)?.apply(&y))
    }
}
