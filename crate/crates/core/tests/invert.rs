use faer::Mat;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twsar_core::forward::{norm, ForwardOperator};
use twsar_core::invert::{
    bfgs_minimize, fista, power_method_norm, prox_l1, prox_tv_magnitude, InnerConfig, OuterConfig, OuterStop, Regularizer,
    StopReason,
};
use twsar_core::oracle::{prox_bruteforce, prox_objective, RegularizerKind};
use twsar_core::Complex64;

fn crandn(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
}

fn operator(matrix: Mat<Complex64>) -> ForwardOperator {
    let n = matrix.nrows();
    ForwardOperator {
        matrix,
        m: None,
        reference_ranges: vec![0.0; n],
        weights: vec![Complex64::new(1.0, 0.0); n],
    }
}

#[test]
fn l1_prox_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let y = crandn(&mut rng, 200);
    for tau in [0.0, 0.1, 0.3] {
        let p = prox_l1(&y, tau);
        for (a, b) in p.iter().zip(&y) {
            let expect = if b.norm() > tau { Complex64::from_polar(b.norm() - tau, b.arg()) } else { Complex64::default() };
            assert!((a - expect).norm() <= 1e-12);
        }
    }
    let real = prox_l1(&[Complex64::new(0.7, 0.0), Complex64::new(0.2, 0.0)], 0.5);
    assert!((real[0].re - 0.2).abs() < 1e-15 && real[1] == Complex64::default());
}

#[test]
fn tv_prox_matches_bruteforce() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (nx, ny, tau) in [(2, 2, 0.5), (2, 2, 0.1), (3, 3, 0.5), (3, 3, 0.05)] {
        let y: Vec<f64> = (0..nx * ny).map(|_| 2.0 * rng.random::<f64>()).collect();
        let yc: Vec<Complex64> = y.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let p = prox_tv_magnitude(&yc, nx, tau, 5000);
        let x: Vec<f64> = p.iter().map(|z| z.re).collect();
        let brute = prox_bruteforce(&y, nx, tau, RegularizerKind::Tv);
        let ours = prox_objective(&x, &y, nx, tau, RegularizerKind::Tv);
        let best = prox_objective(&brute, &y, nx, tau, RegularizerKind::Tv);
        assert!((ours - best).abs() <= 1e-6, "{nx}x{ny} τ={tau}: {ours} vs {best}");
    }
}

#[test]
fn proxes_are_nonexpansive_and_keep_phase() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let a = crandn(&mut rng, 16);
        let b = crandn(&mut rng, 16);
        for p in [
            |y: &[Complex64]| prox_l1(y, 0.2),
            |y: &[Complex64]| prox_tv_magnitude(y, 4, 0.2, 200),
        ] {
            let (pa, pb) = (p(&a), p(&b));
            let mag = |u: &[Complex64], v: &[Complex64]| u.iter().zip(v).map(|(x, y)| (x.norm() - y.norm()).powi(2)).sum::<f64>().sqrt();
            assert!(mag(&pa, &pb) <= mag(&a, &b) * (1.0 + 1e-12));
            for (o, i) in pa.iter().zip(&a) {
                if o.norm() > 0.0 {
                    assert!((o.arg() - i.arg()).abs() < 1e-14);
                }
            }
        }
    }
}

#[test]
fn power_method() {
    let d = Mat::from_fn(2, 2, |i, j| Complex64::new(if i == j { [3.0, 1.0][i] } else { 0.0 }, 0.0));
    assert!((power_method_norm(&operator(d), 100).unwrap() - 3.0).abs() < 1e-6);

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let v = crandn(&mut rng, 30 * 12);
    let a = Mat::from_fn(30, 12, |i, j| v[i * 12 + j]);
    let exact = a.thin_svd().unwrap().S()[0].re;
    let op = operator(a.clone());
    let mut prev = 0.0;
    for it in 1..40 {
        let e = power_method_norm(&op, it).unwrap();
        assert!(e >= prev * (1.0 - 1e-14) && e <= exact * (1.0 + 1e-12));
        prev = e;
    }
    assert!((prev - exact).abs() < 1e-3 * exact);
    let scaled = operator(&a * faer::Scale(Complex64::new(0.0, -2.5)));
    assert!((power_method_norm(&scaled, 30).unwrap() - 2.5 * power_method_norm(&op, 30).unwrap()).abs() < 1e-10 * exact);
    assert!(power_method_norm(&operator(Mat::zeros(3, 3)), 5).is_err());
}

fn well_conditioned(rng: &mut ChaCha8Rng, n: usize) -> Mat<Complex64> {
    let v = crandn(rng, n * n);
    Mat::from_fn(n, n, |i, j| v[i * n + j] * (0.6 / (n as f64).sqrt()) + if i == j { 1.0 } else { 0.0 })
}

#[test]
fn fista_least_squares() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let op = operator(well_conditioned(&mut rng, 20));
    let v_true = crandn(&mut rng, 20);
    let b = op.apply(&v_true).unwrap();
    let cfg = InnerConfig {
        lambda_v: 0.0,
        max_iter: 3000,
        r_tol: 0.0,
        v_tol: 1e-30,
        ..InnerConfig::default()
    };
    let res = fista(&op, &b, 5, &cfg, None).unwrap();
    let r: Vec<Complex64> = op.apply(&res.v).unwrap().iter().zip(&b).map(|(a, b)| a - b).collect();
    assert!(norm(&r) <= 1e-6 * norm(&b));
    assert!(res.objective_history.windows(2).all(|w| w[1] <= w[0]));
    assert!(res.misfit_history.windows(2).all(|w| w[1] <= w[0]));

    // warm start at the solution stops almost immediately
    let warm = fista(&op, &b, 5, &InnerConfig { v_tol: 1e-8, ..cfg }, Some(&res.v)).unwrap();
    assert!(warm.iterations <= 2);
    assert_eq!(warm.stop, StopReason::IterateTolerance);
}

#[test]
fn fista_heavy_tv_flattens_magnitude() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let op = operator(well_conditioned(&mut rng, 16));
    let b = crandn(&mut rng, 16);
    let cfg = InnerConfig {
        lambda_v: 1e6,
        regularizer: Regularizer::Tv,
        tv_inner_iter: 200,
        ..InnerConfig::default()
    };
    let res = fista(&op, &b, 4, &cfg, None).unwrap();
    let m: Vec<f64> = res.v.iter().map(|z| z.norm()).collect();
    let (lo, hi) = m.iter().fold((f64::MAX, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    assert!(hi - lo <= 1e-6 * hi.max(1e-12) + 1e-12, "{lo} {hi}");
}

#[test]
fn fista_rejects_bad_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let op = operator(well_conditioned(&mut rng, 8) * faer::Scale(Complex64::new(1e3, 0.0)));
    let b = crandn(&mut rng, 8);
    let cfg = InnerConfig {
        lipschitz: Some(1e-300),
        max_iter: 200,
        ..InnerConfig::default()
    };
    assert!(fista(&op, &b, 2, &cfg, None).is_err());
}

/// Linear residual `r(m) = J m − d`.
fn linear_problem() -> (Mat<f64>, Vec<f64>) {
    let j = Mat::from_fn(6, 3, |i, k| ((i * 3 + k) as f64 * 0.7).sin() + if i == k { 2.0 } else { 0.0 });
    let d = (0..6).map(|i| (i as f64).cos()).collect();
    (j, d)
}

fn linear_eval(j: &Mat<f64>, d: &[f64], m: &[f64]) -> (f64, Vec<f64>) {
    let r: Vec<f64> = (0..j.nrows()).map(|i| (0..3).map(|k| j[(i, k)] * m[k]).sum::<f64>() - d[i]).collect();
    let g = (0..3).map(|k| (0..j.nrows()).map(|i| j[(i, k)] * r[i]).sum()).collect();
    (0.5 * r.iter().map(|v| v * v).sum::<f64>(), g)
}

#[test]
fn first_bfgs_step_is_gauss_newton() {
    let (j, d) = linear_problem();
    let jtj = j.transpose() * &j;
    let h0 = twsar_core::invert::spd_inverse(&jtj).unwrap();
    let res = bfgs_minimize(
        |m, _: Option<&()>| {
            let (f, g) = linear_eval(&j, &d, m);
            Ok((f, g, ()))
        },
        &[0.3, -0.2, 1.0],
        h0.clone(),
        &OuterConfig::default(),
        1.0,
    )
    .unwrap();
    let step = &res.records[1];
    assert_eq!(step.step_length, 1.0);
    // Gauss-Newton lands on the least-squares minimiser
    let (_, g) = linear_eval(&j, &d, &step.m);
    assert!(g.iter().all(|v| v.abs() < 1e-12));
    assert_eq!(res.stop, OuterStop::Converged);
    assert!(res.records.windows(2).all(|w| w[1].objective <= w[0].objective));

    // starting at the minimiser accepts no step
    let again = bfgs_minimize(
        |m, _: Option<&()>| {
            let (f, g) = linear_eval(&j, &d, m);
            Ok((f, g, ()))
        },
        &step.m,
        h0,
        &OuterConfig::default(),
        1.0,
    )
    .unwrap();
    assert_eq!(again.records.len(), 1);
    assert_eq!(again.stop, OuterStop::Converged);
}

#[test]
fn bfgs_rosenbrock() {
    let rosen = |m: &[f64]| {
        let (x, y) = (m[0], m[1]);
        let f = (1.0 - x).powi(2) + 100.0 * (y - x * x).powi(2);
        let g = vec![-2.0 * (1.0 - x) - 400.0 * x * (y - x * x), 200.0 * (y - x * x)];
        (f, g)
    };
    let cfg = OuterConfig {
        max_iter: 200,
        decrement_tol: 1e-20,
        ..OuterConfig::default()
    };
    let res = bfgs_minimize(
        |m, _: Option<&()>| {
            let (f, g) = rosen(m);
            Ok((f, g, ()))
        },
        &[-1.2, 1.0],
        Mat::identity(2, 2),
        &cfg,
        1.0,
    )
    .unwrap();
    let m = &res.last().m;
    assert!((m[0] - 1.0).abs() < 1e-5 && (m[1] - 1.0).abs() < 1e-5, "{m:?}");
    assert!(res.records.windows(2).all(|w| w[1].objective <= w[0].objective));
}
