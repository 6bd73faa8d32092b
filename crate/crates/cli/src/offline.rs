//! Offline stage: wall snapshots, POD truncation and the on-disk cache.

use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use twsar_core::bem::QuadratureConfig;
use twsar_core::geometry::{AcquisitionGeometry, ImageGrid};
use twsar_core::rom::{build_snapshots, fit_interpolant, pod_truncate, ParameterSpace, PodModel, Snapshots};

use crate::config::ExperimentConfig;
use crate::simulate::wall_mesh;

const FINGERPRINT: &str = "fingerprint.toml";
const BUILD_TIME: &str = "build_seconds.txt";

/// Trained wall models: fields at the pixels and at the receivers.
pub struct Rom {
    pub f1: PodModel,
    pub f0: PodModel,
    /// Wall-clock seconds the build took, recorded with the cache so a
    /// loaded model still reports its offline cost.
    pub build_seconds: f64,
    pub loaded: bool,
}

/// Wall snapshots over `space` (the configured training grid or any other
/// tensor grid sharing the assumed wall).
pub fn snapshots(cfg: &ExperimentConfig, space: &ParameterSpace, acq: &AcquisitionGeometry, grid: &ImageGrid) -> Result<Snapshots> {
    let policy = cfg.mesh_policy();
    let max_edge = cfg.rom.max_edge;
    Ok(build_snapshots(
        space,
        |w, f| wall_mesh(&policy, max_edge, w, f),
        acq,
        grid,
        QuadratureConfig::default(),
    )?)
}

pub fn fit(snap: &Snapshots, space: &ParameterSpace, alpha: f64) -> Result<(PodModel, PodModel)> {
    let f1 = fit_interpolant(pod_truncate(&snap.image.data, alpha)?, space.clone(), snap.image.layout)?;
    let f0 = fit_interpolant(pod_truncate(&snap.receiver.data, alpha)?, space.clone(), snap.receiver.layout)?;
    Ok((f1, f0))
}

pub fn build(cfg: &ExperimentConfig, acq: &AcquisitionGeometry, grid: &ImageGrid) -> Result<Rom> {
    let t = Instant::now();
    let space = cfg.parameter_space()?;
    let snap = snapshots(cfg, &space, acq, grid).context("offline snapshots")?;
    let (f1, f0) = fit(&snap, &space, cfg.rom.alpha)?;
    Ok(Rom {
        f1,
        f0,
        build_seconds: t.elapsed().as_secs_f64(),
        loaded: false,
    })
}

pub fn save(rom: &Rom, cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    rom.f1.save(dir, "f1")?;
    rom.f0.save(dir, "f0")?;
    fs::write(dir.join(BUILD_TIME), format!("{}\n", rom.build_seconds))?;
    fs::write(dir.join(FINGERPRINT), cfg.rom_fingerprint())?;
    Ok(())
}

/// The cached model in `dir` if it was trained with the same settings.
pub fn load(cfg: &ExperimentConfig, dir: &Path) -> Result<Option<Rom>> {
    match fs::read_to_string(dir.join(FINGERPRINT)) {
        Ok(text) if text == cfg.rom_fingerprint() => Ok(Some(Rom {
            f1: PodModel::load(dir, "f1")?,
            f0: PodModel::load(dir, "f0")?,
            build_seconds: fs::read_to_string(dir.join(BUILD_TIME))
                .ok()
                .and_then(|t| t.trim().parse().ok())
                .unwrap_or(0.0),
            loaded: true,
        })),
        _ => Ok(None),
    }
}

pub fn load_or_build(cfg: &ExperimentConfig, acq: &AcquisitionGeometry, grid: &ImageGrid) -> Result<Rom> {
    let dir = cfg.rom_dir();
    if let Some(rom) = load(cfg, &dir)? {
        log::info!("reusing reduced model in {}", dir.display());
        return Ok(rom);
    }
    log::info!("building reduced model into {}", dir.display());
    let rom = build(cfg, acq, grid)?;
    save(&rom, cfg, &dir)?;
    Ok(rom)
}
