use faer::Mat;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twsar_core::bem::{BemScene, BemSolver, QuadratureConfig};
use twsar_core::geometry::{make_acquisition, make_image_grid, AcquisitionConfig, AcquisitionGeometry, ImageGrid, Vec3, WallParams};
use twsar_core::rom::{
    build_snapshots, fit_interpolant, pod_truncate, MeshPolicy, ParamAxis, ParameterSpace, PodModel, RowLayout, WallParameter,
};
use twsar_core::{Complex64, Error};

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat<Complex64> {
    Mat::from_fn(r, c, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

fn spectral_norm(m: &Mat<Complex64>) -> f64 {
    m.thin_svd().unwrap().S()[0].re
}

fn base_wall() -> WallParams {
    WallParams {
        epsilon_r: 2.0,
        sigma: 0.0,
        thickness: 0.1,
        origin_offset: [0.0, 0.0],
        lengths: [0.5, 0.6],
        height: 0.3,
    }
}

fn eps_space(lo: f64, hi: f64, count: usize) -> ParameterSpace {
    ParameterSpace::new(
        base_wall(),
        vec![ParamAxis {
            parameter: WallParameter::EpsilonR,
            lo,
            hi,
            count,
        }],
    )
    .unwrap()
}

/// Flat layout whose row count matches `n` (used for synthetic models).
fn layout(n: usize) -> RowLayout {
    RowLayout::Receiver {
        num_channels: 1,
        num_slow_time: 1,
        num_frequencies: n,
    }
}

#[test]
fn truncation_rank_and_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let col = random_matrix(&mut rng, 30, 1);
    let scales = [1.0, -2.0, 0.5, 3.0];
    let d = Mat::from_fn(30, 4, |i, j| col[(i, 0)] * scales[j]);
    assert_eq!(pod_truncate(&d, 1e-4).unwrap().rank(), 1);

    let d = random_matrix(&mut rng, 50, 9);
    assert_eq!(pod_truncate(&d, 1.0).unwrap().rank(), 1);
    let full: Vec<f64> = {
        let s = d.thin_svd().unwrap();
        (0..9).map(|k| s.S()[k].re).collect()
    };
    for alpha in [0.9, 0.5, 0.3] {
        let f = pod_truncate(&d, alpha).unwrap();
        let k = f.rank();
        assert!(f.sigma.windows(2).all(|w| w[0] >= w[1]));
        assert!(f.sigma.iter().all(|&s| s >= alpha * full[0]));
        let next = full.get(k).copied().unwrap_or(0.0);
        assert_eq!(f.sigma_next, next);
        let err = spectral_norm(&(&d - f.reconstruct()));
        assert!(err <= next * (1.0 + 1e-10) + 1e-13 * full[0], "{err} vs {next}");
    }
}

#[test]
fn zero_snapshots_rejected() {
    let d = Mat::<Complex64>::zeros(5, 4);
    assert!(matches!(pod_truncate(&d, 1e-4), Err(Error::InvalidInput(_))));
}

fn synthetic_model(coeff: impl Fn(f64) -> [Complex64; 2]) -> (PodModel, Mat<Complex64>) {
    let space = eps_space(1.5, 3.5, 9);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let basis = random_matrix(&mut rng, 40, 2);
    let d = Mat::from_fn(40, 9, |i, j| {
        let c = coeff(space.nodes()[j][0]);
        basis[(i, 0)] * c[0] + basis[(i, 1)] * c[1]
    });
    let f = pod_truncate(&d, 1e-12).unwrap();
    (fit_interpolant(f, space, layout(40)).unwrap(), d)
}

#[test]
fn evaluation_at_nodes_reproduces_snapshots() {
    let (model, d) = synthetic_model(|e| [Complex64::new(e.sin(), e), Complex64::new(1.0, -e * e)]);
    let rec = model.factors.reconstruct();
    for (j, m) in model.space.nodes().iter().enumerate() {
        let u = model.evaluate(m);
        assert!(!u.clamped);
        for i in 0..40 {
            assert!((u.value[i] - rec[(i, j)]).norm() <= 1e-12 * (1.0 + rec[(i, j)].norm()));
            assert!((u.value[i] - d[(i, j)]).norm() <= 1e-10);
        }
    }
}

#[test]
fn cubic_coefficients_reproduced_between_nodes() {
    let p = |e: f64| [Complex64::new(e * e * e - 2.0 * e, 0.5), Complex64::new(1.0 - e, e * e)];
    let (model, _) = synthetic_model(p);
    let probe = eps_space(1.5, 3.5, 9);
    for e in [1.61, 2.0, 2.37, 3.49] {
        let u = model.evaluate(&[e]).value;
        // rebuild the exact field from the snapshot basis
        let exact: Vec<Complex64> = {
            let rec = model.factors.reconstruct();
            // nodes 0..3 span cubics, so Lagrange through 4 nodes is exact
            let nodes = probe.nodes();
            let xs: Vec<f64> = nodes[..4].iter().map(|m| m[0]).collect();
            (0..40)
                .map(|i| {
                    (0..4)
                        .map(|a| {
                            let l: f64 = (0..4).filter(|&b| b != a).map(|b| (e - xs[b]) / (xs[a] - xs[b])).product();
                            rec[(i, a)] * l
                        })
                        .sum()
                })
                .collect()
        };
        for i in 0..40 {
            assert!((u[i] - exact[i]).norm() <= 1e-10 * (1.0 + exact[i].norm()));
        }
    }
}

#[test]
fn constant_coefficients_give_zero_gradient() {
    let (model, _) = synthetic_model(|_| [Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.0)]);
    for e in [1.5, 2.2, 3.5] {
        let g = model.gradient(&[e]).value;
        let scale = model.evaluate(&[e]).value.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(g[0].iter().all(|z| z.norm() <= 1e-12 * scale));
    }
}

#[test]
fn rank_one_model_is_profile_times_mode() {
    let space = eps_space(1.0, 4.0, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let v = random_matrix(&mut rng, 20, 1);
    let d = Mat::from_fn(20, 5, |i, j| v[(i, 0)] * Complex64::new(1.0 + j as f64, -(j as f64).sqrt()));
    let model = fit_interpolant(pod_truncate(&d, 1e-4).unwrap(), space, layout(20)).unwrap();
    assert_eq!(model.rank(), 1);
    let h: Vec<Complex64> = model.factors.h.col(0).iter().copied().collect();
    for e in [1.3, 2.9] {
        let u = model.evaluate(&[e]).value;
        let s = u[0] / h[0];
        assert!(u.iter().zip(&h).all(|(a, b)| (a - s * b).norm() <= 1e-12 * a.norm().max(1e-300)));
    }
}

fn fd_check(model: &PodModel, rng: &mut ChaCha8Rng, tol: f64) {
    let (lo, hi) = (model.space.axes[0].lo, model.space.axes[0].hi);
    let h = 1e-4 * (hi - lo);
    for _ in 0..10 {
        let e = lo + h + (hi - lo - 2.0 * h) * rng.random::<f64>();
        let g = &model.gradient(&[e]).value[0];
        let up = model.evaluate(&[e + h]).value;
        let dn = model.evaluate(&[e - h]).value;
        let fd: Vec<Complex64> = up.iter().zip(&dn).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let num: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let den: f64 = g.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        assert!(num <= tol * den, "{} at {e}", num / den);
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let (model, _) = synthetic_model(|e| [Complex64::new((3.0 * e).sin(), e.exp()), Complex64::new(e.ln(), 1.0 / e)]);
    fd_check(&model, &mut ChaCha8Rng::seed_from_u64(5), 1e-5);
}

#[test]
fn clamping_is_flagged() {
    let (model, _) = synthetic_model(|e| [Complex64::new(e, 0.0), Complex64::new(0.0, e * e)]);
    let out = model.evaluate(&[5.0]);
    assert!(out.clamped);
    assert_eq!(out.value, model.evaluate(&[3.5]).value);
    let g = model.gradient(&[5.0]);
    assert!(g.clamped);
    assert_eq!(g.value, model.gradient(&[3.5]).value);
}

#[test]
fn two_parameter_tensor_model() {
    let space = ParameterSpace::new(
        base_wall(),
        vec![
            ParamAxis {
                parameter: WallParameter::EpsilonR,
                lo: 1.5,
                hi: 3.5,
                count: 5,
            },
            ParamAxis {
                parameter: WallParameter::Sigma,
                lo: 0.0,
                hi: 0.01,
                count: 4,
            },
        ],
    )
    .unwrap();
    let nodes = space.nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let basis = random_matrix(&mut rng, 12, 2);
    let f = |m: &[f64]| [Complex64::new(m[0] * m[0], 100.0 * m[1]), Complex64::new(m[0] * m[1] * 50.0, 1.0)];
    let d = Mat::from_fn(12, nodes.len(), |i, j| {
        let c = f(&nodes[j]);
        basis[(i, 0)] * c[0] + basis[(i, 1)] * c[1]
    });
    let model = fit_interpolant(pod_truncate(&d, 1e-12).unwrap(), space, layout(12)).unwrap();
    let m = [2.33, 0.0041];
    let c = f(&m);
    let u = model.evaluate(&m).value;
    for i in 0..12 {
        let exact = basis[(i, 0)] * c[0] + basis[(i, 1)] * c[1];
        assert!((u[i] - exact).norm() <= 1e-10 * (1.0 + exact.norm()));
    }
    let g = model.gradient(&m).value;
    let h = 1e-6;
    let up = model.evaluate(&[m[0], m[1] + h]).value;
    let dn = model.evaluate(&[m[0], m[1] - h]).value;
    let fd = (up[3] - dn[3]) / (2.0 * h);
    assert!((g[1][3] - fd).norm() <= 1e-5 * fd.norm());
}

#[test]
fn persistence_round_trip() {
    let (model, _) = synthetic_model(|e| [Complex64::new(e, 1.0), Complex64::new(2.0, -e)]);
    let dir = tempfile::tempdir().unwrap();
    model.save(dir.path(), "f1").unwrap();
    let back = PodModel::load(dir.path(), "f1").unwrap();
    assert_eq!(back.evaluate(&[2.71]).value, model.evaluate(&[2.71]).value);
    assert_eq!(back.space, model.space);
    assert_eq!(back.layout, model.layout);
}

fn small_setup() -> (AcquisitionGeometry, ImageGrid) {
    let mut cfg = AcquisitionConfig::reference(2, 3);
    cfg.center_frequency = 250e6;
    cfg.bandwidth = 100e6;
    cfg.range = 6.0;
    cfg.scene_center = [0.45, 0.5, 0.0];
    let acq = make_acquisition(&cfg).unwrap();
    let grid = make_image_grid([0.2, 0.2], 0.1, 0.0, [0.45, 0.5]).unwrap();
    (acq, grid)
}

#[test]
fn wall_snapshots() {
    let (acq, grid) = small_setup();
    let space = eps_space(1.0, 1.9, 4);
    let policy = MeshPolicy {
        points_per_wavelength: 5.0,
        max_epsilon_r: 1.9,
    };
    let quad = QuadratureConfig::default();
    let snaps = build_snapshots(&space, |w, f| policy.wall_mesh(w, f), &acq, &grid, quad).unwrap();
    let na = acq.antennas().len();
    assert_eq!(snaps.image.data.nrows(), grid.len() * 2 * na);
    assert_eq!(snaps.image.data.ncols(), 4);
    assert_eq!(snaps.receiver.data.nrows(), acq.num_samples());

    // ε_r = 1 node scatters nothing
    let inc = 1.0 / (4.0 * std::f64::consts::PI * 7.0);
    for d in [&snaps.image.data, &snaps.receiver.data] {
        assert!((0..d.nrows()).all(|i| d[(i, 0)].norm() <= 1e-6 * inc));
        assert!((0..d.nrows()).any(|i| d[(i, 3)].norm() > 1e-3 * inc));
    }

    // a column is exactly a direct solve
    let wall = space.wall(&[1.6]);
    let mesh = policy.wall_mesh(&wall, acq.frequencies[1]).unwrap();
    let solver = BemSolver::new(BemScene::single(mesh), quad);
    let sources: Vec<Vec3> = acq.antennas().iter().map(|a| a.position).collect();
    let mut points = grid.points();
    points.extend_from_slice(&sources);
    let u = solver.scattered_field(acq.omega(1), &[(1.6, 0.0)], &sources, &points).unwrap();
    let layout = snaps.image.layout;
    for a in 0..na {
        for p in 0..grid.len() {
            assert_eq!(snaps.image.data[(layout.image_block(1, a) + p, 2)], u[(p, a)]);
        }
    }
    for c in 0..acq.num_channels() {
        for s in 0..acq.num_slow_time() {
            let i = acq.sample_index(c, s, 1);
            assert_eq!(snaps.receiver.data[(i, 2)], u[(grid.len() + acq.rx_antenna(c, s), s)]);
        }
    }
}

#[test]
fn snapshot_errors_name_the_node() {
    let (acq, grid) = small_setup();
    let space = eps_space(1.0, 1.9, 4);
    let r = build_snapshots(
        &space,
        |w, _| twsar_core::geometry::build_corner_wall(w, 0.5),
        &acq,
        &grid,
        QuadratureConfig::default(),
    );
    assert!(matches!(r, Err(Error::AtNode { node: 0, .. })));
}
