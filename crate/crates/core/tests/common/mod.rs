//! Small wall-plus-grid fixture with a BEM-trained reduced model.

use std::sync::OnceLock;

use twsar_core::bem::QuadratureConfig;
use twsar_core::forward::{Spectrum, ThroughWallModel};
use twsar_core::geometry::{make_acquisition, make_image_grid, AcquisitionConfig, AcquisitionGeometry, ImageGrid, WallParams};
use twsar_core::rom::{build_snapshots, fit_interpolant, pod_truncate, MeshPolicy, ParamAxis, ParameterSpace, WallParameter};

pub const POLICY: MeshPolicy = MeshPolicy {
    points_per_wavelength: 5.0,
    max_epsilon_r: 2.2,
};

pub fn wall() -> WallParams {
    WallParams {
        epsilon_r: 1.6,
        sigma: 0.0,
        thickness: 0.1,
        origin_offset: [0.0, 0.0],
        lengths: [1.0, 1.2],
        height: 0.3,
    }
}

pub fn setup() -> (AcquisitionGeometry, ImageGrid) {
    let mut cfg = AcquisitionConfig::reference(5, 5);
    cfg.range = 8.0;
    cfg.scene_center = [0.6, 0.7, 0.0];
    let acq = make_acquisition(&cfg).unwrap();
    let grid = make_image_grid([0.6, 0.6], 0.3, 0.0, [0.6, 0.7]).unwrap();
    (acq, grid)
}

pub fn space() -> ParameterSpace {
    ParameterSpace::new(
        wall(),
        vec![ParamAxis {
            parameter: WallParameter::EpsilonR,
            lo: 1.0,
            hi: 2.2,
            count: 5,
        }],
    )
    .unwrap()
}

pub fn model() -> &'static ThroughWallModel {
    static MODEL: OnceLock<ThroughWallModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        let (acq, grid) = setup();
        let space = space();
        let snaps = build_snapshots(&space, |w, f| POLICY.wall_mesh(w, f), &acq, &grid, QuadratureConfig::default()).unwrap();
        let f1 = fit_interpolant(pod_truncate(&snaps.image.data, 1e-10).unwrap(), space.clone(), snaps.image.layout).unwrap();
        let f0 = fit_interpolant(pod_truncate(&snaps.receiver.data, 1e-10).unwrap(), space, snaps.receiver.layout).unwrap();
        ThroughWallModel::new(acq, grid, Spectrum::default(), f1, Some(f0)).unwrap()
    })
}
