use num_complex::Complex64;

use crate::geometry::vec3::{self, Vec3};
use crate::{Error, Result};

/// Spherical Bessel functions `j_n(z)` and `y_n(z)` for `n = 0..=nmax`.
///
/// `j_n` uses Miller's downward recurrence normalised by `j_0`, `y_n` the
/// (stable) upward recurrence.
pub fn spherical_bessel(nmax: usize, z: Complex64) -> (Vec<Complex64>, Vec<Complex64>) {
    let (s, c) = (z.sin(), z.cos());
    let start = nmax + 20 + (z.norm() as usize) + (4.0 * (nmax as f64).sqrt()) as usize;
    let mut f = vec![Complex64::default(); start + 2];
    f[start] = Complex64::new(1e-30, 0.0);
    for n in (1..=start).rev() {
        // f_{n-1} = (2n+1)/z f_n - f_{n+1}
        f[n - 1] = f[n] * ((2 * n + 1) as f64) / z - f[n + 1];
        if f[n - 1].norm() > 1e100 {
            for v in f[n - 1..].iter_mut() {
                *v *= 1e-100;
            }
        }
    }
    // normalise with whichever of j_0, j_1 is larger in magnitude
    let j0 = s / z;
    let j1 = s / (z * z) - c / z;
    let scale = if j0.norm() >= j1.norm() { div(j0, f[0]) } else { div(j1, f[1]) };
    let j: Vec<Complex64> = f[..=nmax].iter().map(|v| v * scale).collect();
    let mut y = vec![Complex64::default(); nmax + 1];
    y[0] = -c / z;
    if nmax >= 1 {
        y[1] = -c / (z * z) - s / z;
    }
    for n in 1..nmax {
        y[n + 1] = y[n] * ((2 * n + 1) as f64) / z - y[n - 1];
    }
    (j, y)
}

/// `a / b` without forming `|b|²`, which overflows for large Hankel values.
fn div(a: Complex64, b: Complex64) -> Complex64 {
    let m = b.norm();
    a * (b.conj() / m) / m
}

/// Derivatives from `f_n' = f_{n-1} - (n+1)/z f_n` (`f_0' = -f_1`).
fn derivative(f: &[Complex64], z: Complex64) -> Vec<Complex64> {
    (0..f.len())
        .map(|n| {
            if n == 0 {
                -f[1]
            } else {
                f[n - 1] - f[n] * ((n + 1) as f64) / z
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SphereSource {
    /// `e^{ik0 d·x}` with unit direction `d`.
    PlaneWave { direction: Vec3 },
    /// `e^{ik0|x-s|} / (4π|x-s|)`.
    PointSource { position: Vec3 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereSeriesConfig {
    pub radius: f64,
    pub center: Vec3,
    pub k0: Complex64,
    pub kd: Complex64,
    pub max_order: usize,
    pub source: SphereSource,
}

impl SphereSeriesConfig {
    pub fn new(radius: f64, center: Vec3, k0: Complex64, kd: Complex64, source: SphereSource) -> Self {
        Self {
            radius,
            center,
            k0,
            kd,
            max_order: Self::min_order(radius, k0) + 50,
            source,
        }
    }

    /// Smallest admissible order cap.
    pub fn min_order(radius: f64, k0: Complex64) -> usize {
        (k0.norm() * radius).ceil() as usize + 10
    }
}

/// Scattering coefficients of the sphere for continuous Dirichlet and
/// Neumann traces.
fn coefficients(cfg: &SphereSeriesConfig, nmax: usize) -> Vec<Complex64> {
    let x0 = cfg.k0 * cfg.radius;
    let xd = cfg.kd * cfg.radius;
    let (j0, y0) = spherical_bessel(nmax + 1, x0);
    let (jd, _) = spherical_bessel(nmax + 1, xd);
    let h0: Vec<Complex64> = j0.iter().zip(&y0).map(|(j, y)| j + Complex64::i() * y).collect();
    let dj0 = derivative(&j0, x0);
    let dh0 = derivative(&h0, x0);
    let djd = derivative(&jd, xd);
    (0..=nmax)
        .map(|n| {
            let num = cfg.k0 * dj0[n] * jd[n] - cfg.kd * j0[n] * djd[n];
            let den = cfg.kd * h0[n] * djd[n] - cfg.k0 * dh0[n] * jd[n];
            div(num, den)
        })
        .collect()
}

fn hankel(nmax: usize, z: Complex64) -> Vec<Complex64> {
    let (j, y) = spherical_bessel(nmax, z);
    j.iter().zip(&y).map(|(j, y)| j + Complex64::i() * y).collect()
}

fn legendre(nmax: usize, x: f64) -> Vec<f64> {
    let mut p = vec![0.0; nmax + 1];
    p[0] = 1.0;
    if nmax >= 1 {
        p[1] = x;
    }
    for n in 1..nmax {
        p[n + 1] = ((2 * n + 1) as f64 * x * p[n] - n as f64 * p[n - 1]) / (n + 1) as f64;
    }
    p
}

/// Scattered field of the homogeneous penetrable sphere at exterior points.
///
/// The series is summed until five consecutive terms change the result by
/// less than `1e-10` relative.
pub fn sphere_series_field(cfg: &SphereSeriesConfig, points: &[Vec3]) -> Result<Vec<Complex64>> {
    if !(cfg.radius > 0.0) {
        return Err(Error::invalid("sphere radius must be positive"));
    }
    if cfg.max_order < SphereSeriesConfig::min_order(cfg.radius, cfg.k0) {
        return Err(Error::invalid("series order cap below |k0|·radius + 10"));
    }
    let nmax = cfg.max_order;
    let a = coefficients(cfg, nmax);
    let src = match cfg.source {
        SphereSource::PlaneWave { direction } => (vec3::normalize(direction), None),
        SphereSource::PointSource { position } => {
            let rel = vec3::sub(position, cfg.center);
            let rs = vec3::norm(rel);
            if rs <= cfg.radius {
                return Err(Error::invalid("point source inside the sphere"));
            }
            (vec3::scale(rel, 1.0 / rs), Some(hankel(nmax, cfg.k0 * rs)))
        }
    };
    let mut out = Vec::with_capacity(points.len());
    for (idx, &p) in points.iter().enumerate() {
        let rel = vec3::sub(p, cfg.center);
        let r = vec3::norm(rel);
        if r <= cfg.radius {
            return Err(Error::PointTooClose {
                index: idx,
                distance: r - cfg.radius,
                required: 0.0,
            });
        }
        let cosg = vec3::dot(vec3::scale(rel, 1.0 / r), src.0).clamp(-1.0, 1.0);
        let pn = legendre(nmax, cosg);
        let h = hankel(nmax, cfg.k0 * r);
        let incident = match cfg.source {
            SphereSource::PlaneWave { .. } => 1.0,
            SphereSource::PointSource { position } => 1.0 / (4.0 * std::f64::consts::PI * vec3::dist(p, position)),
        };
        let mut sum = Complex64::default();
        let mut quiet = 0;
        let mut converged = false;
        for n in 0..=nmax {
            let f = (2 * n + 1) as f64;
            let term = match &src.1 {
                None => Complex64::i().powu(n as u32) * f * a[n] * h[n] * pn[n],
                Some(hs) => Complex64::i() * cfg.k0 / (4.0 * std::f64::consts::PI) * f * hs[n] * a[n] * h[n] * pn[n],
            };
            if !term.is_finite() {
                break;
            }
            sum += term;
            if term.norm() <= 1e-10 * sum.norm() + 1e-16 * incident {
                quiet += 1;
                if quiet >= 5 && n >= SphereSeriesConfig::min_order(cfg.radius, cfg.k0) - 10 {
                    converged = true;
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        if !converged {
            return Err(Error::NotConverged(format!("sphere series at point {idx} after order {nmax}")));
        }
        out.push(sum);
    }
    Ok(out)
}
