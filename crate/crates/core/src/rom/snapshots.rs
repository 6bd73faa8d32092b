use faer::Mat;
use serde::{Deserialize, Serialize};

use super::params::ParameterSpace;
use crate::bem::{BemScene, BemSolver, QuadratureConfig};
use crate::geometry::{AcquisitionGeometry, ImageGrid, SurfaceMesh, Vec3, WallParams};
use crate::{Complex64, Error, Result, C0};

/// How snapshot rows map onto field entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RowLayout {
    /// Field at image pixel `p` for a unit source at antenna `a` and
    /// frequency `f`: row `(f · n_a + a) · n_p + p`. Transmit-side and
    /// receive-side factors both come from here (reciprocity).
    Image {
        num_points: usize,
        num_frequencies: usize,
        num_antennas: usize,
    },
    /// Field at the receiver of each phase-history sample for a source at its
    /// transmitter, in phase-history order.
    Receiver {
        num_channels: usize,
        num_slow_time: usize,
        num_frequencies: usize,
    },
}

/// Decoded row: evaluation point, frequency, source antenna. For the image
/// layout `point` is a pixel, for the receiver layout a channel/slow-time
/// pair packed as `channel · n_s + slow`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RowKey {
    pub point: usize,
    pub freq: usize,
    pub source: usize,
}

impl RowLayout {
    pub fn image(acq: &AcquisitionGeometry, grid: &ImageGrid) -> Self {
        RowLayout::Image {
            num_points: grid.len(),
            num_frequencies: acq.num_frequencies(),
            num_antennas: acq.antennas().len(),
        }
    }

    pub fn receiver(acq: &AcquisitionGeometry) -> Self {
        RowLayout::Receiver {
            num_channels: acq.num_channels(),
            num_slow_time: acq.num_slow_time(),
            num_frequencies: acq.num_frequencies(),
        }
    }

    pub fn len(&self) -> usize {
        match *self {
            RowLayout::Image {
                num_points,
                num_frequencies,
                num_antennas,
            } => num_points * num_frequencies * num_antennas,
            RowLayout::Receiver {
                num_channels,
                num_slow_time,
                num_frequencies,
            } => num_channels * num_slow_time * num_frequencies,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// First row of the contiguous pixel block for `(freq, antenna)`.
    pub fn image_block(&self, freq: usize, antenna: usize) -> usize {
        match *self {
            RowLayout::Image {
                num_points,
                num_antennas,
                ..
            } => (freq * num_antennas + antenna) * num_points,
            RowLayout::Receiver { .. } => panic!("image_block on a receiver layout"),
        }
    }

    pub fn key(&self, row: usize) -> RowKey {
        match *self {
            RowLayout::Image {
                num_points,
                num_antennas,
                ..
            } => RowKey {
                point: row % num_points,
                source: (row / num_points) % num_antennas,
                freq: row / (num_points * num_antennas),
            },
            RowLayout::Receiver {
                num_slow_time,
                num_frequencies,
                ..
            } => {
                let freq = row % num_frequencies;
                let pair = row / num_frequencies;
                RowKey {
                    point: pair,
                    freq,
                    source: pair % num_slow_time,
                }
            }
        }
    }
}

/// One column per parameter node.
#[derive(Debug, Clone)]
pub struct SnapshotMatrix {
    pub data: Mat<Complex64>,
    pub layout: RowLayout,
    pub nodes: Vec<Vec<f64>>,
}

/// Snapshot stacks for the image-point fields and the receiver fields.
#[derive(Debug, Clone)]
pub struct Snapshots {
    pub image: SnapshotMatrix,
    pub receiver: SnapshotMatrix,
}

/// Picks the surface resolution per frequency: edges no longer than the
/// shortest interior wavelength over the trained permittivities divided by
/// `points_per_wavelength`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshPolicy {
    pub points_per_wavelength: f64,
    pub max_epsilon_r: f64,
}

impl MeshPolicy {
    pub fn edge(&self, frequency: f64) -> f64 {
        C0 / (frequency * self.max_epsilon_r.max(1.0).sqrt() * self.points_per_wavelength)
    }

    pub fn wall_mesh(&self, wall: &WallParams, frequency: f64) -> Result<SurfaceMesh> {
        crate::geometry::build_corner_wall(wall, self.edge(frequency))
    }
}

/// Scattered fields of the wall alone at every training node, frequency and
/// antenna. `mesher` builds the wall surface for given parameters at a given
/// frequency (Hz). Errors are tagged with the node index.
pub fn build_snapshots<F>(
    space: &ParameterSpace,
    mesher: F,
    acq: &AcquisitionGeometry,
    grid: &ImageGrid,
    quad: QuadratureConfig,
) -> Result<Snapshots>
where
    F: Fn(&WallParams, f64) -> Result<SurfaceMesh>,
{
    let nodes = space.nodes();
    let antennas: Vec<Vec3> = acq.antennas().iter().map(|a| a.position).collect();
    let mut points = grid.points();
    let np = points.len();
    points.extend_from_slice(&antennas);
    let image_layout = RowLayout::image(acq, grid);
    let receiver_layout = RowLayout::receiver(acq);
    let mut image = Mat::<Complex64>::zeros(image_layout.len(), nodes.len());
    let mut receiver = Mat::<Complex64>::zeros(receiver_layout.len(), nodes.len());

    for f in 0..acq.num_frequencies() {
        let omega = acq.omega(f);
        // nodes sharing a geometry reuse the exterior factorisation
        let mut current: Option<(WallParams, BemSolver)> = None;
        for (j, m) in nodes.iter().enumerate() {
            let wall = space.wall(m);
            let fields = (|| {
                if !current.as_ref().is_some_and(|(w, _)| w.same_geometry(&wall)) {
                    current = None;
                    let mesh = mesher(&wall, acq.frequencies[f])?;
                    acq.check_outside(&mesh)?;
                    current = Some((wall, BemSolver::new(BemScene::single(mesh), quad)));
                }
                let solver = &current.as_ref().unwrap().1;
                let u = solver.scattered_field(omega, &[(wall.epsilon_r, wall.sigma)], &antennas, &points)?;
                solver.clear_systems();
                Ok::<_, Error>(u)
            })()
            .map_err(|e| Error::at_node(j, e))?;

            for a in 0..antennas.len() {
                let r0 = image_layout.image_block(f, a);
                for p in 0..np {
                    image[(r0 + p, j)] = fields[(p, a)];
                }
            }
            for c in 0..acq.num_channels() {
                for s in 0..acq.num_slow_time() {
                    let rx = acq.rx_antenna(c, s);
                    receiver[(acq.sample_index(c, s, f), j)] = fields[(np + rx, s)];
                }
            }
            log::debug!("snapshot f = {:.4e} Hz, node {j} {:?}", acq.frequencies[f], m);
        }
        log::info!("snapshots done for frequency {}/{}", f + 1, acq.num_frequencies());
    }
    Ok(Snapshots {
        image: SnapshotMatrix {
            data: image,
            layout: image_layout,
            nodes: nodes.clone(),
        },
        receiver: SnapshotMatrix {
            data: receiver,
            layout: receiver_layout,
            nodes,
        },
    })
}
