mod common;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twsar_core::bem::{BemScene, BemSolver, QuadratureConfig};
use twsar_core::forward::{freespace_operator, greens_free, inner_product, norm, predict, ForwardOperator, Spectrum, ThroughWallModel};
use twsar_core::invert::{bfgs_outer, InnerConfig, OuterConfig, OuterStop, VarPro};
use twsar_core::oracle::fd_gradient;
use twsar_core::{Complex64, C0};

fn crandn(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
}

fn adjoint_check(op: &ForwardOperator, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10 {
        let v = crandn(&mut rng, op.num_pixels());
        let d = crandn(&mut rng, op.num_samples());
        let av = op.apply(&v).unwrap();
        let lhs = inner_product(&av, &d);
        let rhs = inner_product(&v, &op.adjoint(&d).unwrap());
        assert!((lhs - rhs).norm() <= 1e-10 * norm(&av) * norm(&d));
    }
}

#[test]
fn adjoint_consistency() {
    let model = common::model();
    adjoint_check(&model.freespace(), 1);
    adjoint_check(&model.operator(&[1.93]), 2);
}

fn max_rel_diff(a: &ForwardOperator, b: &ForwardOperator) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..a.num_pixels() {
        for i in 0..a.num_samples() {
            worst = worst.max((a.matrix[(i, j)] - b.matrix[(i, j)]).norm() / b.matrix[(i, j)].norm());
        }
    }
    worst
}

#[test]
fn no_contrast_is_free_space() {
    let model = common::model();
    let free = freespace_operator(&model.acq, &model.grid, Spectrum::default()).unwrap();
    assert_eq!(free.matrix, model.freespace().matrix);
    assert!(max_rel_diff(&model.operator(&[1.0]), &free) <= 1e-6);

    let f0 = model.direct(&[1.0]);
    let omega = model.acq.omega(model.acq.num_frequencies() - 1);
    let scale = omega * omega / (4.0 * std::f64::consts::PI * model.acq.config.range);
    assert!(f0.norm() <= 1e-6 * scale);
    assert!(model.direct(&[2.0]).norm() > 1e-3 * scale);
}

#[test]
fn direct_return_scales_with_spectrum() {
    let model = common::model();
    let doubled = ThroughWallModel::new(
        model.acq.clone(),
        model.grid.clone(),
        Spectrum { power: 2.0 },
        model.pod_f1.clone(),
        model.pod_f0.clone(),
    )
    .unwrap();
    let (a, b) = (model.direct(&[1.8]), doubled.direct(&[1.8]));
    for (x, y) in a.samples.iter().zip(&b.samples) {
        assert_eq!(*y, *x * 2.0);
    }
}

#[test]
fn entry_matches_direct_bem() {
    let model = common::model();
    let eps = 1.87;
    let op = model.operator(&[eps]);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let i = (rng.random::<f64>() * op.num_samples() as f64) as usize;
    let j = (rng.random::<f64>() * op.num_pixels() as f64) as usize;
    let s = model.acq.sample(i);
    let wall = twsar_core::geometry::WallParams {
        epsilon_r: eps,
        ..common::wall()
    };
    let mesh = common::POLICY.wall_mesh(&wall, model.acq.frequencies[s.freq]).unwrap();
    let solver = BemSolver::new(BemScene::single(mesh), QuadratureConfig::default());
    let x = model.grid.point(j);
    let u = solver.scattered_field(s.omega, &[(eps, 0.0)], &[s.tx, s.rx], &[x]).unwrap();
    let gt = greens_free(x, s.tx, s.omega).unwrap() + u[(0, 0)];
    let gr = greens_free(x, s.rx, s.omega).unwrap() + u[(0, 1)];
    let r0 = op.reference_ranges[i];
    let direct = Complex64::from_polar(s.omega * s.omega, -s.omega * r0 / C0) * gt * gr;
    let rel = (op.matrix[(i, j)] - direct).norm() / direct.norm();
    assert!(rel <= 0.05, "{rel}");
}

#[test]
fn operator_is_continuous_in_m() {
    let model = common::model();
    let a = model.operator(&[1.61]);
    let scale = a.matrix.norm_l2();
    let mut prev = f64::INFINITY;
    for delta in [1e-2, 1e-3, 1e-4] {
        let b = model.operator(&[1.61 + delta * 1.2]);
        let diff = (&b.matrix - &a.matrix).norm_l2() / scale;
        assert!(diff < prev);
        prev = diff;
    }
    assert!(prev < 1e-4);
}

#[test]
fn reference_scatterer_has_zero_phase() {
    let model = common::model();
    let op = model.operator(&[1.0]);
    let p = model.grid.nearest(0.6, 0.7).unwrap();
    for i in 0..op.num_samples() {
        if model.acq.sample(i).channel == 0 {
            assert!(op.matrix[(i, p)].arg().abs() < 1e-5);
        }
    }
}

fn scene(model: &ThroughWallModel) -> Vec<Complex64> {
    let mut v = vec![Complex64::default(); model.grid.len()];
    v[1] = Complex64::new(1.0, 0.0);
    v[6] = Complex64::new(0.0, 0.8);
    v
}

fn tight_inner() -> InnerConfig {
    InnerConfig {
        lambda_v: 0.0,
        max_iter: 200_000,
        r_tol: 1e-16,
        v_tol: 1e-24,
        ..InnerConfig::default()
    }
}

#[test]
fn misfit_gradient_with_fixed_reflectivity() {
    let model = common::model();
    let v = scene(model);
    let m_true = [1.7];
    let d = predict(&model.operator(&m_true), &v, Some(&model.direct(&m_true))).unwrap();
    let misfit = |m: &[f64]| {
        let r = predict(&model.operator(m), &v, Some(&model.direct(m))).unwrap();
        0.5 * r.samples.iter().zip(&d.samples).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>()
    };
    for m in [1.3, 1.55, 2.05] {
        let (op, dops) = model.operator_with_gradient(&[m]);
        let r: Vec<Complex64> = predict(&op, &v, Some(&model.direct(&[m])))
            .unwrap()
            .samples
            .iter()
            .zip(&d.samples)
            .map(|(a, b)| a - b)
            .collect();
        let dav = &dops[0] * faer::col::ColRef::from_slice(&v);
        let jac: Vec<Complex64> = dav.iter().zip(&model.direct_gradient(&[m])[0]).map(|(a, b)| a + b).collect();
        let g: f64 = jac.iter().zip(&r).map(|(a, b)| (a.conj() * b).re).sum();
        let fd = fd_gradient(misfit, &[m], 1e-5)[0];
        assert!((g - fd).abs() <= 1e-6 * fd.abs(), "{g} vs {fd}");
    }
}

#[test]
fn reduced_gradient_matches_finite_differences() {
    let model = common::model();
    let v = scene(model);
    let m_true = [1.7];
    let d = predict(&model.operator(&m_true), &v, Some(&model.direct(&m_true))).unwrap();
    let problem = VarPro {
        model,
        data: &d.samples,
        include_f0: true,
        inner: tight_inner(),
    };
    for m in [1.35, 2.0] {
        let e = problem.reduced_objective_gradient(&[m], None).unwrap();
        let h = 1e-3 * 1.2;
        let j = |x: &[f64]| problem.reduced_objective_gradient(x, Some(&e.inner.v)).unwrap().objective;
        let fd = fd_gradient(j, &[m], h)[0];
        assert!((e.gradient[0] - fd).abs() <= 1e-3 * fd.abs(), "{} vs {fd}", e.gradient[0]);
    }
}

#[test]
fn bfgs_recovers_permittivity() {
    let model = common::model();
    let v = scene(model);
    let m_true = [1.7];
    let d = predict(&model.operator(&m_true), &v, Some(&model.direct(&m_true))).unwrap();
    let problem = VarPro {
        model,
        data: &d.samples,
        include_f0: true,
        inner: InnerConfig {
            max_iter: 20_000,
            r_tol: 1e-12,
            v_tol: 1e-20,
            ..tight_inner()
        },
    };
    let rec = bfgs_outer(
        &problem,
        &OuterConfig {
            m0: vec![2.0],
            ..OuterConfig::default()
        },
    )
    .unwrap();
    assert!((rec.m[0] - 1.7).abs() < 0.02, "{:?}", rec.trace.to_csv());
    let objs: Vec<f64> = rec.trace.records.iter().map(|r| r.objective).collect();
    assert!(objs.windows(2).all(|w| w[1] <= w[0]));

    let at_truth = bfgs_outer(
        &problem,
        &OuterConfig {
            m0: m_true.to_vec(),
            ..OuterConfig::default()
        },
    )
    .unwrap();
    assert_eq!(at_truth.trace.records.len(), 1);
    assert_eq!(at_truth.stop, OuterStop::Converged);
}
