//! Synthetic phase histories.
//!
//! Point-scatterer scenes use the corrected-Green's-function model with the
//! wall fields computed by a direct BEM solve at the true wall, so the data
//! do not depend on the reduced model. Sphere scenes are solved full-wave:
//! wall and spheres form one multi-body transmission problem with no Born
//! step. Both are weighted like the forward model, `a(ω) e^{-iωR₀/c}` times
//! the received scattered field.

use anyhow::{Context, Result};
use twsar_core::bem::{BemScene, BemSolver, QuadratureConfig};
use twsar_core::forward::{greens_free, sample_prefactors, PhaseHistory, Spectrum};
use twsar_core::geometry::{build_corner_wall, build_sphere_mesh, AcquisitionGeometry, SurfaceMesh, Vec3, WallParams};
use twsar_core::rom::MeshPolicy;
use twsar_core::Complex64;

use crate::config::{ExperimentConfig, SphereSpec};

/// Wall surface at `frequency` with the policy's edge, capped at
/// `max_edge`.
pub fn wall_mesh(policy: &MeshPolicy, max_edge: f64, wall: &WallParams, frequency: f64) -> twsar_core::Result<SurfaceMesh> {
    build_corner_wall(wall, policy.edge(frequency).min(max_edge))
}

fn sphere_mesh(ppw: f64, max_edge: f64, s: &SphereSpec, frequency: f64) -> twsar_core::Result<SurfaceMesh> {
    let policy = MeshPolicy {
        points_per_wavelength: ppw,
        max_epsilon_r: s.epsilon_r,
    };
    build_sphere_mesh(s.radius, s.center, policy.edge(frequency).min(max_edge).min(0.5 * s.radius))
}

pub fn simulate_data(cfg: &ExperimentConfig, acq: &AcquisitionGeometry) -> Result<PhaseHistory> {
    if cfg.scene.spheres.is_empty() {
        point_scatterer_data(cfg, acq)
    } else {
        full_wave_data(cfg, acq)
    }
}

fn antenna_positions(acq: &AcquisitionGeometry) -> Vec<Vec3> {
    acq.antennas().iter().map(|a| a.position).collect()
}

fn point_scatterer_data(cfg: &ExperimentConfig, acq: &AcquisitionGeometry) -> Result<PhaseHistory> {
    let scatterers = &cfg.scene.scatterers;
    let mut d = PhaseHistory::zeros(acq.num_samples());
    if scatterers.is_empty() && !cfg.include_f0 {
        return Ok(d);
    }
    let wall = cfg.wall.truth;
    let policy = MeshPolicy {
        points_per_wavelength: cfg.simulation.points_per_wavelength,
        max_epsilon_r: wall.epsilon_r,
    };
    let (_, weights) = sample_prefactors(acq, Spectrum::default());
    let antennas = antenna_positions(acq);
    let ns = scatterers.len();
    let mut points: Vec<Vec3> = scatterers.iter().map(|s| s.position).collect();
    if cfg.include_f0 {
        points.extend_from_slice(&antennas);
    }

    for f in 0..acq.num_frequencies() {
        let omega = acq.omega(f);
        let mesh = wall_mesh(&policy, cfg.simulation.max_edge, &wall, acq.frequencies[f])?;
        acq.check_outside(&mesh)?;
        let solver = BemSolver::new(BemScene::single(mesh), QuadratureConfig::default());
        let u = solver
            .scattered_field(omega, &[(wall.epsilon_r, wall.sigma)], &antennas, &points)
            .with_context(|| format!("wall solve at {:.4e} Hz", acq.frequencies[f]))?;
        // total Green's function from every antenna to every scatterer
        let mut g = vec![Complex64::default(); ns * antennas.len()];
        for (k, s) in scatterers.iter().enumerate() {
            for (a, &y) in antennas.iter().enumerate() {
                g[k * antennas.len() + a] = greens_free(s.position, y, omega)? + u[(k, a)];
            }
        }
        for i in 0..acq.num_samples() {
            let s = acq.sample(i);
            if s.freq != f {
                continue;
            }
            let na = antennas.len();
            let mut sum: Complex64 = scatterers
                .iter()
                .enumerate()
                .map(|(k, sc)| g[k * na + s.tx_antenna] * g[k * na + s.rx_antenna] * sc.value())
                .sum();
            if cfg.include_f0 {
                sum += u[(ns + s.rx_antenna, s.tx_antenna)];
            }
            d.samples[i] = weights[i] * sum;
        }
    }
    Ok(d)
}

fn full_wave_data(cfg: &ExperimentConfig, acq: &AcquisitionGeometry) -> Result<PhaseHistory> {
    let wall = cfg.wall.truth;
    let sim = &cfg.simulation;
    let policy = MeshPolicy {
        points_per_wavelength: sim.points_per_wavelength,
        max_epsilon_r: wall.epsilon_r,
    };
    let mut media = vec![(wall.epsilon_r, wall.sigma)];
    media.extend(cfg.scene.spheres.iter().map(|s| (s.epsilon_r, s.sigma)));
    let (_, weights) = sample_prefactors(acq, Spectrum::default());
    let antennas = antenna_positions(acq);
    let mut d = PhaseHistory::zeros(acq.num_samples());

    for f in 0..acq.num_frequencies() {
        let freq = acq.frequencies[f];
        let mut meshes = vec![wall_mesh(&policy, sim.max_edge, &wall, freq)?];
        for s in &cfg.scene.spheres {
            meshes.push(sphere_mesh(sim.points_per_wavelength, sim.max_edge, s, freq)?);
        }
        for m in &meshes {
            acq.check_outside(m)?;
        }
        let scene = BemScene::multi(meshes).context("assembling the multi-body scene")?;
        let solver = BemSolver::new(scene, QuadratureConfig::default());
        let u = solver
            .scattered_field(acq.omega(f), &media, &antennas, &antennas)
            .with_context(|| format!("multi-body solve at {freq:.4e} Hz"))?;
        for i in 0..acq.num_samples() {
            let s = acq.sample(i);
            if s.freq == f {
                d.samples[i] = weights[i] * u[(s.rx_antenna, s.tx_antenna)];
            }
        }
    }
    Ok(d)
}
