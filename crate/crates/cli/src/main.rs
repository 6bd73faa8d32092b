use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use twsar::experiment::{acquire_data, data_array, run_with_rom};
use twsar::simulate::wall_mesh;
use twsar::{offline, ExperimentConfig, ExperimentKind};
use twsar_core::arrayio::write_array;
use twsar_core::forward::{apply_adjoint, Spectrum, ThroughWallModel};
use twsar_core::geometry::build_sphere_mesh;

#[derive(Parser)]
#[command(name = "twsar", version, about = "Through-wall SAR experiments")]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured noise seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the assumed and true wall surfaces (and spheres) as OFF files.
    Mesh {
        /// Frequency in Hz; the top of the band by default.
        #[arg(long)]
        frequency: Option<f64>,
    },
    /// Build (or reuse) the reduced wall model.
    Offline,
    /// Simulate the phase history into `data.twsr`.
    Simulate,
    /// Reconstruct from `--data` (or freshly simulated data).
    Reconstruct {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Back-project with the standard and through-wall models at the start
    /// parameters.
    Backproject {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Full pipeline; NAME overrides the configured experiment kind.
    Experiment { name: Option<String> },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let Some(path) = &cli.config else {
        bail!("--config is required");
    };
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output = o.clone();
    }
    std::fs::create_dir_all(&cfg.output)?;
    let acq = cfg.acquisition_geometry()?;
    let grid = cfg.image_grid()?;

    match cli.command {
        Command::Mesh { frequency } => {
            let f = frequency.unwrap_or_else(|| *acq.frequencies.last().unwrap());
            let policy = cfg.mesh_policy();
            for (name, wall) in [("wall_assumed", cfg.wall.assumed), ("wall_truth", cfg.wall.truth)] {
                let mesh = wall_mesh(&policy, cfg.rom.max_edge, &wall, f)?;
                mesh.write_off(cfg.output.join(format!("{name}.off")))?;
                println!("{name}: {} triangles, max edge {:.4} m", mesh.num_triangles(), mesh.max_edge());
            }
            for (k, s) in cfg.scene.spheres.iter().enumerate() {
                let mesh = build_sphere_mesh(s.radius, s.center, 0.5 * s.radius)?;
                mesh.write_off(cfg.output.join(format!("sphere_{k}.off")))?;
            }
        }
        Command::Offline => {
            let rom = offline::load_or_build(&cfg, &acq, &grid)?;
            println!(
                "reduced model in {}: rank {} (pixels), {} (receivers), {:.1} s",
                cfg.rom_dir().display(),
                rom.f1.rank(),
                rom.f0.rank(),
                rom.build_seconds
            );
        }
        Command::Simulate => {
            let d = acquire_data(&cfg, &acq, None)?;
            let path = cfg.output.join("data.twsr");
            write_array(&path, &data_array(&d, &acq))?;
            println!("wrote {} ({} samples, norm {:.6e})", path.display(), d.len(), d.norm());
        }
        Command::Reconstruct { data } => {
            let rom = offline::load_or_build(&cfg, &acq, &grid).context("stage 'offline'")?;
            let out = run_with_rom(&cfg, rom, data.as_deref())?;
            print!("{}", toml::to_string(&out.summary)?);
        }
        Command::Backproject { data } => {
            let d = acquire_data(&cfg, &acq, data.as_deref())?;
            let rom = offline::load_or_build(&cfg, &acq, &grid)?;
            let model = ThroughWallModel::new(acq.clone(), grid.clone(), Spectrum::default(), rom.f1, Some(rom.f0))?;
            let m = cfg.start();
            let mut b = d.clone();
            if cfg.include_f0 {
                let f0 = model.direct(&m);
                b.samples.iter_mut().zip(&f0.samples).for_each(|(a, f)| *a -= f);
            }
            for (name, op, data) in [("standard", model.freespace(), &d), ("through_wall", model.operator(&m), &b)] {
                let img = apply_adjoint(&op, data, &grid)?;
                twsar::export::export_image(&img, cfg.output.join(format!("backprojection_{name}.pgm")))?;
            }
        }
        Command::Experiment { name } => {
            if let Some(n) = name {
                cfg.kind = n.parse::<ExperimentKind>()?;
            }
            let out = twsar::run_experiment(&cfg)?;
            print!("{}", toml::to_string(&out.summary)?);
        }
    }
    Ok(())
}
