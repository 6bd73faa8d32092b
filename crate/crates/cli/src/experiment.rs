//! Experiment pipelines: simulate, reconstruct, export.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use serde::Serialize;
use twsar_core::arrayio::{read_array, write_array, Array};
use twsar_core::forward::{apply_adjoint, norm, ForwardOperator, PhaseHistory, ReflectivityImage, Spectrum, ThroughWallModel};
use twsar_core::geometry::{vec3, AcquisitionGeometry, ImageGrid, Vec3};
use twsar_core::invert::{bfgs_outer, fista, power_method_norm, InnerConfig, Reconstruction, Regularizer, VarPro};
use twsar_core::Complex64;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::export::{colourize_overlay, export_image, peak_sidelobe, profile_csv, sidelobe_profile, CutDirection};
use crate::noise::add_noise;
use crate::offline::{self, Rom};
use crate::simulate::simulate_data;

/// Structured result summary written to `summary.toml`.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub seed: u64,
    pub truth_m: Vec<f64>,
    pub recovered_m: Vec<f64>,
    pub final_objective: f64,
    pub outer_stop: Option<String>,
    pub rom_rank_f1: usize,
    pub rom_rank_f0: usize,
    pub rom_loaded: bool,
    pub metrics: BTreeMap<String, f64>,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
}

/// Everything a run produced, for callers that check results in process.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub summary: Summary,
    /// Relative misfit per FISTA iteration (known-wall runs).
    pub misfit_through_wall: Vec<f64>,
    pub misfit_standard: Vec<f64>,
    /// Reduced objective at every accepted outer iterate.
    pub outer_objectives: Vec<f64>,
}

struct Run<'a> {
    cfg: &'a ExperimentConfig,
    out: PathBuf,
    acq: AcquisitionGeometry,
    grid: ImageGrid,
    model: ThroughWallModel,
    summary: Summary,
}

fn stage<T>(summary: &mut Summary, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let t = Instant::now();
    let r = f().with_context(|| format!("stage '{name}'"))?;
    *summary.timings.entry(name.to_string()).or_default() += t.elapsed().as_secs_f64();
    Ok(r)
}

/// Complex image as a `[ny, nx]` array.
fn image_array(v: &[Complex64], grid: &ImageGrid) -> Array {
    Array::complex(vec![grid.ny, grid.nx], v.to_vec()).expect("image dims")
}

pub fn data_array(d: &PhaseHistory, acq: &AcquisitionGeometry) -> Array {
    Array::complex(
        vec![acq.num_channels(), acq.num_slow_time(), acq.num_frequencies()],
        d.samples.clone(),
    )
    .expect("data dims")
}

pub fn read_data(path: &Path, acq: &AcquisitionGeometry) -> Result<PhaseHistory> {
    let a = read_array(path)?;
    let dims = vec![acq.num_channels(), acq.num_slow_time(), acq.num_frequencies()];
    ensure!(a.dims == dims, "{} has dims {:?}, acquisition needs {:?}", path.display(), a.dims, dims);
    Ok(PhaseHistory { samples: a.into_complex()? })
}

/// Down-range unit vector (away from the radar) averaged over the
/// transmit/receive bisectors at mid aperture.
pub fn down_range(acq: &AcquisitionGeometry) -> Vec3 {
    let u = acq.range_direction();
    let mut sum = [0.0; 3];
    for ch in &acq.channels {
        let (s, c) = ch.bistatic_angle.sin_cos();
        let r = [c * u[0] - s * u[1], s * u[0] + c * u[1], 0.0];
        sum = vec3::add(sum, vec3::normalize(vec3::add(u, r)));
    }
    vec3::scale(vec3::normalize(sum), -1.0)
}

/// Location of the strongest pixel within `radius` of `near`, refined to
/// sub-pixel accuracy with a parabola through its neighbours on each axis.
pub fn locate_peak(magnitudes: &[f64], grid: &ImageGrid, near: Vec3, radius: f64) -> Option<[f64; 2]> {
    let best = (0..grid.len())
        .filter(|&p| {
            let x = grid.point(p);
            (x[0] - near[0]).hypot(x[1] - near[1]) <= radius
        })
        .max_by(|&a, &b| magnitudes[a].total_cmp(&magnitudes[b]))?;
    let (ix, iy) = (best % grid.nx, best / grid.nx);
    let refine = |lo: Option<f64>, mid: f64, hi: Option<f64>| match (lo, hi) {
        (Some(l), Some(h)) => {
            let den = l - 2.0 * mid + h;
            if den < 0.0 {
                (0.5 * (l - h) / den).clamp(-0.5, 0.5)
            } else {
                0.0
            }
        }
        _ => 0.0,
    };
    let at = |i: usize, j: usize| magnitudes[j * grid.nx + i];
    let m = at(ix, iy);
    let dx = refine(ix.checked_sub(1).map(|i| at(i, iy)), m, (ix + 1 < grid.nx).then(|| at(ix + 1, iy)));
    let dy = refine(iy.checked_sub(1).map(|j| at(ix, j)), m, (iy + 1 < grid.ny).then(|| at(ix, iy + 1)));
    Some([grid.x(ix) + dx * grid.spacing, grid.y(iy) + dy * grid.spacing])
}

/// Fraction of `Σ|v|²` farther than `radius` from every centre.
pub fn background_fraction(v: &[Complex64], grid: &ImageGrid, centres: &[Vec3], radius: f64) -> f64 {
    let total: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let outside: f64 = (0..grid.len())
        .filter(|&p| {
            let x = grid.point(p);
            centres.iter().all(|c| (x[0] - c[0]).hypot(x[1] - c[1]) > radius)
        })
        .map(|p| v[p].norm_sqr())
        .sum();
    outside / total
}

/// Back-projection of the samples of one channel only.
fn channel_backprojection(op: &ForwardOperator, d: &PhaseHistory, acq: &AcquisitionGeometry, channel: usize) -> Result<Vec<f64>> {
    let masked: Vec<Complex64> = d
        .samples
        .iter()
        .enumerate()
        .map(|(i, &z)| if acq.sample(i).channel == channel { z } else { Complex64::default() })
        .collect();
    Ok(op.adjoint(&masked)?.iter().map(|z| z.norm()).collect())
}

impl<'a> Run<'a> {
    fn new(cfg: &'a ExperimentConfig, rom: Rom, mut summary: Summary) -> Result<Self> {
        let acq = cfg.acquisition_geometry()?;
        let grid = cfg.image_grid()?;
        summary.rom_rank_f1 = rom.f1.rank();
        summary.rom_rank_f0 = rom.f0.rank();
        summary.rom_loaded = rom.loaded;
        let model = ThroughWallModel::new(acq.clone(), grid.clone(), Spectrum::default(), rom.f1, Some(rom.f0))?;
        fs::create_dir_all(&cfg.output)?;
        Ok(Self {
            cfg,
            out: cfg.output.clone(),
            acq,
            grid,
            model,
            summary,
        })
    }

    fn write(&self, name: &str, array: &Array) -> Result<()> {
        write_array(self.out.join(name), array)?;
        Ok(())
    }

    fn write_image(&self, name: &str, v: &[Complex64]) -> Result<()> {
        self.write(&format!("{name}.twsr"), &image_array(v, &self.grid))?;
        export_image(&ReflectivityImage::new(v.to_vec(), self.grid.clone())?, self.out.join(format!("{name}.pgm")))
    }

    fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.summary.metrics.insert(name.into(), value);
    }

    /// `λ_v` from the relative rule, or the configured absolute value.
    fn lambda(&self, op: &ForwardOperator) -> Result<f64> {
        Ok(match self.cfg.regularization.relative {
            Some(r) => r * power_method_norm(op, self.cfg.inner.power_iter)?,
            None => self.cfg.inner.lambda_v,
        })
    }

    fn final_lambda(&self, op: &ForwardOperator, b: &[Complex64]) -> Result<f64> {
        match self.cfg.regularization.final_fraction {
            Some(f) => Ok(f * op.adjoint(b)?.iter().map(|z| z.norm()).fold(0.0, f64::max)),
            None => self.lambda(op),
        }
    }

    fn reference_m(&self) -> Vec<f64> {
        if self.cfg.regularization.reference.is_empty() {
            self.cfg.start()
        } else {
            self.cfg.regularization.reference.clone()
        }
    }

    fn data_minus_direct(&self, d: &PhaseHistory, m: &[f64]) -> Vec<Complex64> {
        if !self.cfg.include_f0 {
            return d.samples.clone();
        }
        let f0 = self.model.direct(m);
        d.samples.iter().zip(&f0.samples).map(|(a, b)| a - b).collect()
    }

    fn overlay(&mut self, name: &str, op: &ForwardOperator, d: &PhaseHistory) -> Result<()> {
        let nc = self.acq.num_channels();
        let mut ch: Vec<Vec<f64>> = (0..nc.min(3)).map(|c| channel_backprojection(op, d, &self.acq, c)).collect::<Result<_>>()?;
        while ch.len() < 3 {
            ch.push(vec![0.0; self.grid.len()]);
        }
        colourize_overlay([&ch[0], &ch[1], &ch[2]], &self.grid, self.out.join(format!("{name}.ppm")))
    }

    fn known_wall(&mut self, d: &PhaseHistory, out: &mut Outcome) -> Result<()> {
        let m = self.cfg.truth_coordinates();
        let tw = self.model.operator(&m);
        let std = self.model.freespace();
        let inner = InnerConfig {
            lambda_v: self.lambda(&tw)?,
            ..self.cfg.inner
        };
        let b = self.data_minus_direct(d, &m);
        let nx = self.grid.nx;
        let (r_tw, r_std) = stage(&mut self.summary, "reconstruct", || Ok((fista(&tw, &b, nx, &inner, None)?, fista(&std, &b, nx, &inner, None)?)))?;
        self.write_image("image_through_wall", &r_tw.v)?;
        self.write_image("image_standard", &r_std.v)?;
        let mut csv = String::from("iteration,misfit_through_wall,misfit_standard\n");
        for (k, (a, s)) in r_tw.misfit_history.iter().zip(&r_std.misfit_history).enumerate() {
            csv.push_str(&format!("{},{a},{s}\n", k + 1));
        }
        fs::write(self.out.join("misfit.csv"), csv)?;
        let bd = PhaseHistory { samples: b.clone() };
        let bp_tw = apply_adjoint(&tw, &bd, &self.grid)?;
        let bp_std = apply_adjoint(&std, &bd, &self.grid)?;
        self.write_image("backprojection_through_wall", &bp_tw.values)?;
        self.write_image("backprojection_standard", &bp_std.values)?;
        self.overlay("overlay_through_wall", &tw, &bd)?;
        self.overlay("overlay_standard", &std, &bd)?;

        let last = |h: &[f64]| h.last().copied().unwrap_or(f64::NAN);
        self.metric("misfit_through_wall", last(&r_tw.misfit_history));
        self.metric("misfit_standard", last(&r_std.misfit_history));
        let wall = self.cfg.wall.truth;
        self.metric("predicted_shift", wall.thickness * (wall.epsilon_r.sqrt() - 1.0));
        let down = down_range(&self.acq);
        let radius = 5.0 * self.grid.spacing;
        let mag_tw: Vec<f64> = r_tw.v.iter().map(|z| z.norm()).collect();
        let mag_std: Vec<f64> = r_std.v.iter().map(|z| z.norm()).collect();
        let (bp_mag_tw, bp_mag_std) = (bp_tw.magnitudes(), bp_std.magnitudes());
        for (k, s) in self.cfg.scene.scatterers.clone().iter().enumerate() {
            let p = s.position;
            for (label, mag) in [
                ("through_wall", &mag_tw),
                ("standard", &mag_std),
                ("backprojection_through_wall", &bp_mag_tw),
                ("backprojection_standard", &bp_mag_std),
            ] {
                if let Some(q) = locate_peak(mag, &self.grid, p, radius) {
                    let off = [q[0] - p[0], q[1] - p[1]];
                    self.metric(format!("peak_error_{label}_{k}"), off[0].hypot(off[1]));
                    self.metric(format!("peak_shift_{label}_{k}"), off[0] * down[0] + off[1] * down[1]);
                }
            }
        }
        out.misfit_through_wall = r_tw.misfit_history;
        out.misfit_standard = r_std.misfit_history;
        self.summary.recovered_m = m;
        self.summary.final_objective = r_tw.objective;
        Ok(())
    }

    fn sidelobe(&mut self, d: &PhaseHistory) -> Result<()> {
        let m = self.cfg.truth_coordinates();
        let tw = self.model.operator(&m);
        let std = self.model.freespace();
        let bd = PhaseHistory { samples: self.data_minus_direct(d, &m) };
        let bp_tw = apply_adjoint(&tw, &bd, &self.grid)?;
        let bp_std = apply_adjoint(&std, &bd, &self.grid)?;
        self.write_image("backprojection_through_wall", &bp_tw.values)?;
        self.write_image("backprojection_standard", &bp_std.values)?;
        self.overlay("overlay_through_wall", &tw, &bd)?;
        self.overlay("overlay_standard", &std, &bd)?;
        let dir = self.acq.range_direction();
        for (cut, cut_name) in [(CutDirection::Range, "range"), (CutDirection::CrossRange, "cross_range")] {
            let mut psl = [0.0; 2];
            for (k, (img, label)) in [(&bp_tw, "through_wall"), (&bp_std, "standard")].into_iter().enumerate() {
                let prof = sidelobe_profile(&img.magnitudes(), &self.grid, dir, cut)?;
                fs::write(self.out.join(format!("profile_{cut_name}_{label}.csv")), profile_csv(&prof))?;
                psl[k] = peak_sidelobe(&prof).unwrap_or(f64::NEG_INFINITY);
                self.metric(format!("peak_sidelobe_{cut_name}_{label}_db"), psl[k]);
            }
            self.metric(format!("sidelobe_gain_{cut_name}_db"), psl[1] - psl[0]);
        }
        self.summary.recovered_m = m;
        Ok(())
    }

    fn varpro(&mut self, d: &PhaseHistory, out: &mut Outcome) -> Result<Reconstruction> {
        let reference = self.model.operator(&self.reference_m());
        let inner = InnerConfig {
            lambda_v: self.lambda(&reference)?,
            ..self.cfg.inner
        };
        self.metric("lambda_v", inner.lambda_v);
        let problem = VarPro {
            model: &self.model,
            data: &d.samples,
            include_f0: self.cfg.include_f0,
            inner,
        };
        let outer = twsar_core::invert::OuterConfig {
            m0: self.cfg.start(),
            ..self.cfg.outer.clone()
        };
        let rec = stage(&mut self.summary, "reconstruct", || Ok(bfgs_outer(&problem, &outer)?))?;
        fs::write(self.out.join("trace.csv"), rec.trace.to_csv())?;
        self.write_image("image_through_wall", &rec.v)?;
        let ms: Vec<f64> = rec.trace.records.iter().flat_map(|r| r.m.clone()).collect();
        self.write(
            "outer_iterates.twsr",
            &Array::real(vec![rec.trace.records.len(), self.model.num_params()], ms)?,
        )?;
        out.outer_objectives = rec.trace.records.iter().map(|r| r.objective).collect();
        self.metric("outer_steps", (rec.trace.records.len() - 1) as f64);
        self.summary.recovered_m = rec.m.clone();
        self.summary.final_objective = rec.objective;
        self.summary.outer_stop = Some(format!("{:?}", rec.stop));

        // standard model with the same regularisation, for comparison
        let std = self.model.freespace();
        let lam_std = self.lambda(&std)?;
        let std_img = stage(&mut self.summary, "reconstruct", || {
            Ok(fista(&std, &d.samples, self.grid.nx, &InnerConfig { lambda_v: lam_std, ..inner }, None)?)
        })?;
        self.write_image("image_standard", &std_img.v)?;
        self.write_image("backprojection_standard", &apply_adjoint(&std, d, &self.grid)?.values)?;
        let tw = self.model.operator(&rec.m);
        let bd = PhaseHistory { samples: self.data_minus_direct(d, &rec.m) };
        self.write_image("backprojection_through_wall", &apply_adjoint(&tw, &bd, &self.grid)?.values)?;
        Ok(rec)
    }

    fn approximate_wall(&mut self, d: &PhaseHistory, out: &mut Outcome) -> Result<()> {
        let rec = self.varpro(d, out)?;
        let kind = self.cfg.regularization.final_regularizer.unwrap_or(Regularizer::L1);
        let tw = self.model.operator(&rec.m);
        let std = self.model.freespace();
        let b = self.data_minus_direct(d, &rec.m);
        let nx = self.grid.nx;
        let cfg_tw = InnerConfig {
            lambda_v: self.final_lambda(&tw, &b)?,
            regularizer: kind,
            ..self.cfg.inner
        };
        let cfg_std = InnerConfig {
            lambda_v: self.final_lambda(&std, &d.samples)?,
            regularizer: kind,
            ..self.cfg.inner
        };
        self.metric("final_lambda_through_wall", cfg_tw.lambda_v);
        self.metric("final_lambda_standard", cfg_std.lambda_v);
        let (f_tw, f_std) = stage(&mut self.summary, "final_images", || {
            Ok((fista(&tw, &b, nx, &cfg_tw, None)?, fista(&std, &d.samples, nx, &cfg_std, None)?))
        })?;
        let tag = match kind {
            Regularizer::L1 => "l1",
            Regularizer::Tv => "tv",
        };
        self.write_image(&format!("image_through_wall_{tag}"), &f_tw.v)?;
        self.write_image(&format!("image_standard_{tag}"), &f_std.v)?;
        let centres: Vec<Vec3> = self.cfg.scene.spheres.iter().map(|s| s.center).collect();
        let bg_tw = background_fraction(&f_tw.v, &self.grid, &centres, 0.3);
        let bg_std = background_fraction(&f_std.v, &self.grid, &centres, 0.3);
        self.metric("background_fraction_through_wall", bg_tw);
        self.metric("background_fraction_standard", bg_std);
        self.metric("background_reduction", if bg_tw > 0.0 { bg_std / bg_tw } else { f64::INFINITY });
        Ok(())
    }
}

/// Data for `cfg`: read from `data` when given, otherwise simulated with
/// the configured noise.
pub fn acquire_data(cfg: &ExperimentConfig, acq: &AcquisitionGeometry, data: Option<&Path>) -> Result<PhaseHistory> {
    match data {
        Some(p) => read_data(p, acq),
        None => {
            let clean = simulate_data(cfg, acq).context("simulating data")?;
            Ok(add_noise(&clean, cfg.noise.fraction, cfg.seed))
        }
    }
}

/// Runs the configured experiment with an already trained model.
pub fn run_with_rom(cfg: &ExperimentConfig, rom: Rom, data: Option<&Path>) -> Result<Outcome> {
    let mut summary = Summary {
        experiment: cfg.kind.name().to_string(),
        seed: cfg.seed,
        truth_m: cfg.truth_coordinates(),
        ..Default::default()
    };
    summary.timings.insert("offline".into(), rom.build_seconds);
    let mut run = Run::new(cfg, rom, summary)?;
    let acq = run.acq.clone();
    let d = stage(&mut run.summary, "simulate", || acquire_data(cfg, &acq, data))?;
    ensure!(d.len() == acq.num_samples(), "data has {} samples, acquisition has {}", d.len(), acq.num_samples());
    if d.norm() == 0.0 {
        bail!("data are identically zero");
    }
    run.write("data.twsr", &data_array(&d, &acq))?;
    run.metric("data_norm", norm(&d.samples));

    let mut out = Outcome::default();
    match cfg.kind {
        ExperimentKind::KnownWall => run.known_wall(&d, &mut out)?,
        ExperimentKind::Sidelobe => run.sidelobe(&d)?,
        ExperimentKind::UnknownPermittivity => {
            run.varpro(&d, &mut out)?;
        }
        ExperimentKind::ApproximateWall => run.approximate_wall(&d, &mut out)?,
    }
    let text = toml::to_string(&run.summary)?;
    fs::write(run.out.join("summary.toml"), text)?;
    fs::write(run.out.join("config.toml"), cfg.to_toml())?;
    out.summary = run.summary;
    Ok(out)
}

/// Full pipeline: offline model (cached), data, reconstruction, exports.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Outcome> {
    let acq = cfg.acquisition_geometry()?;
    let grid = cfg.image_grid()?;
    let rom = offline::load_or_build(cfg, &acq, &grid).context("stage 'offline'")?;
    run_with_rom(cfg, rom, None)
}
