//! Experiment configuration, read from TOML.
//!
//! Every key may be written in flat dotted form, e.g.
//!
//! ```toml
//! kind = "known_wall"
//! wall.truth.epsilon_r = 3.0
//! rom.axes = [{ parameter = "epsilon_r", lo = 1.5, hi = 3.5, count = 9 }]
//! ```
//!
//! Optional tables fall back to the defaults documented on each field.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use twsar_core::geometry::{make_acquisition, make_image_grid, AcquisitionConfig, AcquisitionGeometry, ImageGrid, Vec3, WallParams};
use twsar_core::invert::{InnerConfig, OuterConfig, Regularizer};
use twsar_core::rom::{MeshPolicy, ParamAxis, ParameterSpace};
use twsar_core::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Wall known exactly, noiseless point-scatterer data, unregularised
    /// least squares with both models.
    KnownWall,
    /// Permittivity recovered jointly with the image from noisy data.
    UnknownPermittivity,
    /// Full-wave sphere data with a mis-specified wall.
    ApproximateWall,
    /// Back-projection sidelobes for a single point target.
    Sidelobe,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::KnownWall => "known_wall",
            ExperimentKind::UnknownPermittivity => "unknown_permittivity",
            ExperimentKind::ApproximateWall => "approximate_wall",
            ExperimentKind::Sidelobe => "sidelobe",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.replace('-', "_").as_str() {
            "known_wall" => ExperimentKind::KnownWall,
            "unknown_permittivity" => ExperimentKind::UnknownPermittivity,
            "approximate_wall" => ExperimentKind::ApproximateWall,
            "sidelobe" => ExperimentKind::Sidelobe,
            other => bail!("unknown experiment '{other}'"),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub extent: [f64; 2],
    pub spacing: f64,
    #[serde(default)]
    pub height: f64,
    pub center: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallConfig {
    /// Wall used to simulate the data.
    pub truth: WallParams,
    /// Wall the reduced model is trained around.
    pub assumed: WallParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RomConfig {
    pub axes: Vec<ParamAxis>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_ppw")]
    pub points_per_wavelength: f64,
    /// Upper bound on the mesh edge (m), so that coarse low-frequency meshes
    /// still clear the image pixels.
    #[serde(default = "default_max_edge")]
    pub max_edge: f64,
    /// Where the trained model is cached; `<output>/rom` when absent.
    #[serde(default)]
    pub directory: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointScatterer {
    pub position: Vec3,
    /// Complex reflectivity as `[re, im]`.
    #[serde(default = "unit_reflectivity")]
    pub reflectivity: [f64; 2],
}

impl PointScatterer {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.reflectivity[0], self.reflectivity[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereSpec {
    pub center: Vec3,
    pub radius: f64,
    pub epsilon_r: f64,
    #[serde(default)]
    pub sigma: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    #[serde(default)]
    pub scatterers: Vec<PointScatterer>,
    #[serde(default)]
    pub spheres: Vec<SphereSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub points_per_wavelength: f64,
    pub max_edge: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            points_per_wavelength: default_ppw(),
            max_edge: default_max_edge(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    /// `‖noise‖ / ‖data‖`.
    pub fraction: f64,
}

/// Regularisation weight `λ_v = relative · ‖A(reference)‖₂`. When
/// `relative` is absent the absolute `inner.lambda_v` is used as is.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegularizationConfig {
    pub relative: Option<f64>,
    /// Parameters at which the operator norm is taken; `outer.m0` when
    /// empty.
    pub reference: Vec<f64>,
    /// Regulariser for the final image at the recovered parameters (the
    /// approximate-wall experiment also reports an L1 image).
    pub final_regularizer: Option<Regularizer>,
    /// Final-image weight as a fraction of `‖Aᴴb‖_∞`, the smallest weight
    /// for which the L1 solution is zero. Scales with each operator and
    /// data pair, so both models get the same relative sparsity. The
    /// relative rule is used when absent.
    pub final_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    pub acquisition: AcquisitionConfig,
    pub grid: GridConfig,
    pub wall: WallConfig,
    pub rom: RomConfig,
    #[serde(default)]
    pub scene: SceneConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub inner: InnerConfig,
    #[serde(default)]
    pub regularization: RegularizationConfig,
    #[serde(default)]
    pub outer: OuterConfig,
    /// Adds the direct wall return to simulated point-scatterer data and
    /// subtracts the modelled one during reconstruction.
    #[serde(default)]
    pub include_f0: bool,
}

fn default_alpha() -> f64 {
    1e-4
}

fn default_ppw() -> f64 {
    5.0
}

fn default_max_edge() -> f64 {
    0.1
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn unit_reflectivity() -> [f64; 2] {
    [1.0, 0.0]
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        text.parse().with_context(|| format!("parsing {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        self.wall.truth.validate()?;
        self.wall.assumed.validate()?;
        if self.rom.axes.is_empty() {
            bail!("rom.axes is empty");
        }
        let space = self.parameter_space()?;
        let (lo, hi) = (space.lower(), space.upper());
        for (d, axis) in self.rom.axes.iter().enumerate() {
            let base = axis.parameter.get(&self.wall.assumed);
            if base < lo[d] || base > hi[d] {
                bail!("assumed {:?} = {base} lies outside the trained range [{}, {}]", axis.parameter, lo[d], hi[d]);
            }
        }
        let m0 = self.start();
        if m0.len() != space.dim() || m0.iter().zip(lo.iter().zip(&hi)).any(|(m, (l, h))| m < l || m > h) {
            bail!("outer.m0 = {m0:?} must have one value per ROM axis inside the trained range");
        }
        if !self.regularization.reference.is_empty() && self.regularization.reference.len() != space.dim() {
            bail!("regularization.reference needs one value per ROM axis");
        }
        if let Some(f) = self.regularization.final_fraction {
            if !(f > 0.0 && f <= 1.0) {
                bail!("regularization.final_fraction must lie in (0, 1]");
            }
        }
        if !(self.noise.fraction >= 0.0) {
            bail!("noise.fraction must be non-negative");
        }
        if !self.scene.spheres.is_empty() && !self.scene.scatterers.is_empty() {
            bail!("a scene holds either point scatterers or spheres, not both");
        }
        for s in &self.scene.spheres {
            if !(s.radius > 0.0 && s.epsilon_r >= 1.0 && s.sigma >= 0.0) {
                bail!("bad sphere {s:?}");
            }
        }
        if !(self.rom.max_edge > 0.0 && self.simulation.max_edge > 0.0) {
            bail!("mesh edge caps must be positive");
        }
        self.inner.validate()?;
        make_acquisition(&self.acquisition)?;
        Ok(())
    }

    pub fn acquisition_geometry(&self) -> Result<AcquisitionGeometry> {
        Ok(make_acquisition(&self.acquisition)?)
    }

    pub fn image_grid(&self) -> Result<ImageGrid> {
        let g = &self.grid;
        Ok(make_image_grid(g.extent, g.spacing, g.height, g.center)?)
    }

    pub fn parameter_space(&self) -> Result<ParameterSpace> {
        Ok(ParameterSpace::new(self.wall.assumed, self.rom.axes.clone())?)
    }

    pub fn mesh_policy(&self) -> MeshPolicy {
        let eps_max = self
            .rom
            .axes
            .iter()
            .filter(|a| a.parameter == twsar_core::rom::WallParameter::EpsilonR)
            .map(|a| a.hi)
            .fold(self.wall.assumed.epsilon_r, f64::max);
        MeshPolicy {
            points_per_wavelength: self.rom.points_per_wavelength,
            max_epsilon_r: eps_max,
        }
    }

    pub fn rom_dir(&self) -> PathBuf {
        self.rom.directory.clone().unwrap_or_else(|| self.output.join("rom"))
    }

    /// Coordinates of the true wall in the model's parameter space.
    pub fn truth_coordinates(&self) -> Vec<f64> {
        self.rom.axes.iter().map(|a| a.parameter.get(&self.wall.truth)).collect()
    }

    /// Outer starting point; the assumed wall when `outer.m0` is empty.
    pub fn start(&self) -> Vec<f64> {
        if self.outer.m0.is_empty() {
            self.rom.axes.iter().map(|a| a.parameter.get(&self.wall.assumed)).collect()
        } else {
            self.outer.m0.clone()
        }
    }

    /// Everything the offline model depends on, as text; a cached model is
    /// reused only when this matches.
    pub fn rom_fingerprint(&self) -> String {
        #[derive(Serialize)]
        struct Key<'a> {
            acquisition: &'a AcquisitionConfig,
            grid: &'a GridConfig,
            assumed: &'a WallParams,
            axes: &'a [ParamAxis],
            alpha: f64,
            points_per_wavelength: f64,
            max_edge: f64,
        }
        toml::to_string(&Key {
            acquisition: &self.acquisition,
            grid: &self.grid,
            assumed: &self.wall.assumed,
            axes: &self.rom.axes,
            alpha: self.rom.alpha,
            points_per_wavelength: self.rom.points_per_wavelength,
            max_edge: self.rom.max_edge,
        })
        .expect("fingerprint serialises")
    }
}

impl std::str::FromStr for ExperimentConfig {
    type Err = anyhow::Error;

    fn from_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}
