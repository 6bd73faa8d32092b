use faer::linalg::solvers::Solve;
use faer::Mat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularizerKind {
    /// Isotropic total variation with forward differences and replicated
    /// boundary.
    Tv,
    L1,
}

/// `½‖x − y‖² + τ R(x)` for a real `ny × nx` image stored row-major.
pub fn prox_objective(x: &[f64], y: &[f64], nx: usize, tau: f64, kind: RegularizerKind) -> f64 {
    let fit: f64 = x.iter().zip(y).map(|(a, b)| 0.5 * (a - b).powi(2)).sum();
    fit + tau * smoothed_reg(x, nx, kind, 0.0)
}

fn diffs(x: &[f64], nx: usize, p: usize) -> (f64, f64, Option<usize>, Option<usize>) {
    let ny = x.len() / nx;
    let (ix, iy) = (p % nx, p / nx);
    let a = (ix + 1 < nx).then_some(p + 1);
    let b = (iy + 1 < ny).then_some(p + nx);
    (a.map_or(0.0, |a| x[a] - x[p]), b.map_or(0.0, |b| x[b] - x[p]), a, b)
}

fn smoothed_reg(x: &[f64], nx: usize, kind: RegularizerKind, mu: f64) -> f64 {
    match kind {
        RegularizerKind::L1 => x.iter().map(|v| (v * v + mu * mu).sqrt()).sum(),
        RegularizerKind::Tv => (0..x.len())
            .map(|p| {
                let (dx, dy, ..) = diffs(x, nx, p);
                (dx * dx + dy * dy + mu * mu).sqrt()
            })
            .sum(),
    }
}

/// Gradient and Hessian of the smoothed objective.
fn derivatives(x: &[f64], y: &[f64], nx: usize, tau: f64, kind: RegularizerKind, mu: f64) -> (Vec<f64>, Mat<f64>) {
    let n = x.len();
    let mut g: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let mut h = Mat::<f64>::identity(n, n);
    match kind {
        RegularizerKind::L1 => {
            for i in 0..n {
                let s = (x[i] * x[i] + mu * mu).sqrt();
                g[i] += tau * x[i] / s;
                h[(i, i)] += tau * mu * mu / (s * s * s);
            }
        }
        RegularizerKind::Tv => {
            for p in 0..n {
                let (dx, dy, a, b) = diffs(x, nx, p);
                let s = (dx * dx + dy * dy + mu * mu).sqrt();
                // rows of the local difference operator: (index, coefficient) per component
                let mut rows: Vec<(f64, Vec<(usize, f64)>)> = Vec::new();
                if let Some(a) = a {
                    rows.push((dx, vec![(a, 1.0), (p, -1.0)]));
                }
                if let Some(b) = b {
                    rows.push((dy, vec![(b, 1.0), (p, -1.0)]));
                }
                for (d, r) in &rows {
                    for &(i, c) in r {
                        g[i] += tau * c * d / s;
                    }
                }
                for (d1, r1) in &rows {
                    for (d2, r2) in &rows {
                        let same = std::ptr::eq(r1, r2) as u8 as f64;
                        let hk = tau * (same / s - d1 * d2 / (s * s * s));
                        for &(i, ci) in r1 {
                            for &(j, cj) in r2 {
                                h[(i, j)] += hk * ci * cj;
                            }
                        }
                    }
                }
            }
        }
    }
    (g, h)
}

fn newton(mut x: Vec<f64>, y: &[f64], nx: usize, tau: f64, kind: RegularizerKind, mu: f64) -> Vec<f64> {
    let phi = |x: &[f64]| -> f64 {
        let fit: f64 = x.iter().zip(y).map(|(a, b)| 0.5 * (a - b).powi(2)).sum();
        fit + tau * smoothed_reg(x, nx, kind, mu)
    };
    for _ in 0..200 {
        let (g, h) = derivatives(&x, y, nx, tau, kind, mu);
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm < 1e-14 {
            break;
        }
        let rhs = Mat::from_fn(x.len(), 1, |i, _| -g[i]);
        let step = h.partial_piv_lu().solve(&rhs);
        let f0 = phi(&x);
        let slope: f64 = (0..x.len()).map(|i| g[i] * step[(i, 0)]).sum();
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let trial: Vec<f64> = (0..x.len()).map(|i| x[i] + t * step[(i, 0)]).collect();
            if phi(&trial) <= f0 + 1e-4 * t * slope {
                x = trial;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    x
}

/// Minimiser of `½‖x − y‖² + τ R(x)` for real images of at most nine
/// pixels.
///
/// The non-smooth regulariser is replaced by `√(·² + μ²)` and the strongly
/// convex smoothed problem is solved by damped Newton iterations while `μ`
/// is driven from the data scale down to `1e-12`; several starting points
/// are tried and the best exact objective wins.
pub fn prox_bruteforce(y: &[f64], nx: usize, tau: f64, kind: RegularizerKind) -> Vec<f64> {
    assert!(y.len() <= 9 && nx >= 1 && y.len() % nx == 0, "oracle handles at most 3×3 images");
    if tau == 0.0 {
        return y.to_vec();
    }
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(tau).max(1e-300);
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let starts = [y.to_vec(), vec![0.0; y.len()], vec![mean; y.len()], y.iter().rev().copied().collect()];
    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in starts {
        let mut x = start;
        let mut mu = scale;
        while mu > 1e-12 * scale {
            x = newton(x, y, nx, tau, kind, mu);
            mu *= 0.1;
        }
        let f = prox_objective(&x, y, nx, tau, kind);
        if best.as_ref().is_none_or(|(fb, _)| f < *fb) {
            best = Some((f, x));
        }
    }
    best.unwrap().1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weight_is_identity() {
        let y = [1.0, -2.0, 0.5, 3.0];
        assert_eq!(prox_bruteforce(&y, 2, 0.0, RegularizerKind::Tv), y.to_vec());
    }

    #[test]
    fn l1_matches_soft_threshold() {
        let y = [1.5, -0.3, 0.8, -2.0, 0.0, 0.49];
        let x = prox_bruteforce(&y, 3, 0.5, RegularizerKind::L1);
        for (x, y) in x.iter().zip(&y) {
            let s = y.signum() * (y.abs() - 0.5).max(0.0);
            assert!((x - s).abs() < 1e-8, "{x} vs {s}");
        }
    }

    #[test]
    fn tv_two_pixels_closed_form() {
        // 1×2 image: the jump shrinks by 2τ until the pixels merge
        let x = prox_bruteforce(&[0.0, 1.0], 2, 0.2, RegularizerKind::Tv);
        assert!((x[0] - 0.2).abs() < 1e-8 && (x[1] - 0.8).abs() < 1e-8, "{x:?}");
        let x = prox_bruteforce(&[0.0, 1.0], 2, 0.7, RegularizerKind::Tv);
        assert!((x[0] - 0.5).abs() < 1e-8 && (x[1] - 0.5).abs() < 1e-8, "{x:?}");
    }
}
