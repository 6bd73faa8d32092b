use serde::{Deserialize, Serialize};

use crate::Complex64;

/// Regulariser applied to the reflectivity magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularizer {
    /// Isotropic total variation of `|v|`.
    Tv,
    L1,
}

/// `max(|y_i| − τ, 0) e^{i∠y_i}`.
pub fn prox_l1(y: &[Complex64], tau: f64) -> Vec<Complex64> {
    y.iter()
        .map(|&z| {
            let r = z.norm();
            if r <= tau {
                Complex64::default()
            } else {
                z * ((r - tau) / r)
            }
        })
        .collect()
}

/// Forward differences with a replicated boundary (zero difference across
/// the last row and column). Images are row-major with `nx` columns.
fn gradient(x: &[f64], nx: usize, gx: &mut [f64], gy: &mut [f64]) {
    let ny = x.len() / nx;
    for iy in 0..ny {
        for ix in 0..nx {
            let p = iy * nx + ix;
            gx[p] = if ix + 1 < nx { x[p + 1] - x[p] } else { 0.0 };
            gy[p] = if iy + 1 < ny { x[p + nx] - x[p] } else { 0.0 };
        }
    }
}

/// Negative adjoint of [`gradient`].
fn divergence(px: &[f64], py: &[f64], nx: usize, out: &mut [f64]) {
    let ny = px.len() / nx;
    for iy in 0..ny {
        for ix in 0..nx {
            let p = iy * nx + ix;
            let mut d = 0.0;
            if ix + 1 < nx {
                d += px[p];
            }
            if ix > 0 {
                d -= px[p - 1];
            }
            if iy + 1 < ny {
                d += py[p];
            }
            if iy > 0 {
                d -= py[p - nx];
            }
            out[p] = d;
        }
    }
}

/// Isotropic total variation `Σ_p |∇x|_p`.
pub fn total_variation(x: &[f64], nx: usize) -> f64 {
    let mut gx = vec![0.0; x.len()];
    let mut gy = vec![0.0; x.len()];
    gradient(x, nx, &mut gx, &mut gy);
    gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).sum()
}

/// `R(|v|)` for the given regulariser.
pub fn regularizer_value(v: &[Complex64], nx: usize, kind: Regularizer) -> f64 {
    match kind {
        Regularizer::L1 => v.iter().map(|z| z.norm()).sum(),
        Regularizer::Tv => total_variation(&v.iter().map(|z| z.norm()).collect::<Vec<_>>(), nx),
    }
}

/// Nonnegative TV denoising `argmin_{x ≥ 0} ½‖x − b‖² + τ TV(x)` by fast
/// gradient projection on the dual.
pub fn prox_tv_real(b: &[f64], nx: usize, tau: f64, iters: usize) -> Vec<f64> {
    if tau == 0.0 || b.is_empty() {
        return b.iter().map(|v| v.max(0.0)).collect();
    }
    let n = b.len();
    let (mut px, mut py) = (vec![0.0; n], vec![0.0; n]);
    let (mut rx, mut ry) = (vec![0.0; n], vec![0.0; n]);
    let (mut gx, mut gy) = (vec![0.0; n], vec![0.0; n]);
    let mut div = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut t = 1.0f64;
    let primal = |div: &[f64], x: &mut [f64]| {
        for i in 0..n {
            x[i] = (b[i] + tau * div[i]).max(0.0);
        }
    };
    for _ in 0..iters {
        divergence(&rx, &ry, nx, &mut div);
        primal(&div, &mut x);
        gradient(&x, nx, &mut gx, &mut gy);
        let step = 1.0 / (8.0 * tau);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let mom = (t - 1.0) / t_next;
        for i in 0..n {
            let (qx, qy) = (rx[i] + step * gx[i], ry[i] + step * gy[i]);
            let s = qx.hypot(qy).max(1.0);
            let (nx_, ny_) = (qx / s, qy / s);
            rx[i] = nx_ + mom * (nx_ - px[i]);
            ry[i] = ny_ + mom * (ny_ - py[i]);
            px[i] = nx_;
            py[i] = ny_;
        }
        t = t_next;
    }
    divergence(&px, &py, nx, &mut div);
    primal(&div, &mut x);
    x
}

/// Proximal map of `τ TV(|·|)`: denoise the magnitudes, keep the phases.
pub fn prox_tv_magnitude(y: &[Complex64], nx: usize, tau: f64, inner_iter: usize) -> Vec<Complex64> {
    if tau == 0.0 {
        return y.to_vec();
    }
    let r: Vec<f64> = y.iter().map(|z| z.norm()).collect();
    let x = prox_tv_real(&r, nx, tau, inner_iter);
    y.iter()
        .zip(&r)
        .zip(&x)
        .map(|((&z, &r), &x)| if r > 0.0 { z * (x / r) } else { Complex64::new(x, 0.0) })
        .collect()
}

/// Proximal map of `τ R(|·|)`.
pub fn prox(kind: Regularizer, y: &[Complex64], nx: usize, tau: f64, tv_iter: usize) -> Vec<Complex64> {
    match kind {
        Regularizer::L1 => prox_l1(y, tau),
        Regularizer::Tv => prox_tv_magnitude(y, nx, tau, tv_iter),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l1_closed_form() {
        let th = 0.7f64;
        let y = [Complex64::from_polar(2.0, th), Complex64::new(0.3, -0.4), Complex64::new(3.0, 0.0)];
        let p = prox_l1(&y, 1.0);
        assert!((p[0] - Complex64::from_polar(1.0, th)).norm() < 1e-15);
        assert_eq!(p[1], Complex64::default());
        assert_eq!(p[2], Complex64::new(2.0, 0.0));
    }

    #[test]
    fn divergence_is_negative_adjoint() {
        let nx = 4;
        let x: Vec<f64> = (0..12).map(|i| ((i * 7) % 5) as f64 - 1.3).collect();
        let px: Vec<f64> = (0..12).map(|i| ((i * 3) % 7) as f64 * 0.2).collect();
        let py: Vec<f64> = (0..12).map(|i| 1.0 - ((i * 5) % 3) as f64).collect();
        let (mut gx, mut gy, mut d) = (vec![0.0; 12], vec![0.0; 12], vec![0.0; 12]);
        gradient(&x, nx, &mut gx, &mut gy);
        divergence(&px, &py, nx, &mut d);
        let lhs: f64 = (0..12).map(|i| gx[i] * px[i] + gy[i] * py[i]).sum();
        let rhs: f64 = (0..12).map(|i| -x[i] * d[i]).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn tv_identity_and_constant_magnitude() {
        let y: Vec<Complex64> = (0..9).map(|i| Complex64::from_polar(1.5, 0.4 * i as f64)).collect();
        assert_eq!(prox_tv_magnitude(&y, 3, 0.0, 20), y);
        let p = prox_tv_magnitude(&y, 3, 0.8, 20);
        for (a, b) in p.iter().zip(&y) {
            assert!((a - b).norm() < 1e-12);
            assert!((a.arg() - b.arg()).abs() < 1e-15);
        }
    }
}
