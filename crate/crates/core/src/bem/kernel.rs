use num_complex::Complex64;

use crate::{C0, EPS0};

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Wavenumber of a medium with relative permittivity `epsilon_r` and
/// conductivity `sigma` at angular frequency `omega`:
/// `k = (ω / c0) √(ε_r + iσ / (ω ε0))`, on the branch with `Im k ≥ 0`.
pub fn complex_wavenumber(omega: f64, epsilon_r: f64, sigma: f64) -> Complex64 {
    assert!(omega > 0.0, "angular frequency must be positive");
    let k0 = omega / C0;
    if sigma == 0.0 && epsilon_r >= 0.0 {
        return Complex64::new(k0 * epsilon_r.sqrt(), 0.0);
    }
    let eps = Complex64::new(epsilon_r, sigma / (omega * EPS0));
    // principal root has Re >= 0; with Im(eps) >= 0 it also has Im >= 0
    let k = eps.sqrt() * k0;
    if k.im < 0.0 {
        -k
    } else {
        k
    }
}

/// Free-space and interior wavenumbers of one transmission problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavenumbers {
    pub k0: Complex64,
    pub kd: Complex64,
}

impl Wavenumbers {
    pub fn new(k0: Complex64, kd: Complex64) -> crate::Result<Self> {
        if k0.im < 0.0 || kd.im < 0.0 {
            return Err(crate::Error::invalid("wavenumbers must have non-negative imaginary part"));
        }
        Ok(Self { k0, kd })
    }

    pub fn for_medium(omega: f64, epsilon_r: f64, sigma: f64) -> Self {
        Self {
            k0: Complex64::new(omega / C0, 0.0),
            kd: complex_wavenumber(omega, epsilon_r, sigma),
        }
    }
}

/// `e^{ikr} / (4πr)`.
#[inline]
pub fn helmholtz_g(k: Complex64, r: f64) -> Complex64 {
    (Complex64::i() * k * r).exp() / (FOUR_PI * r)
}

/// Returns `G(r)` and `(ikr - 1) e^{ikr} / (4πr³)`; the gradient of `G`
/// with respect to `y` is the latter times `y - x`.
#[inline]
pub fn helmholtz_g_and_radial(k: Complex64, r: f64) -> (Complex64, Complex64) {
    let ikr = Complex64::new(-k.im * r, k.re * r);
    let (s, c) = ikr.im.sin_cos();
    let inv_r = 1.0 / r;
    let m = if ikr.re == 0.0 { 1.0 } else { ikr.re.exp() };
    let g = Complex64::new(c, s) * (m * inv_r / FOUR_PI);
    let d = g * Complex64::new(ikr.re - 1.0, ikr.im) * (inv_r * inv_r);
    (g, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lossless_media() {
        let w = 2.0 * std::f64::consts::PI * 349.9e6;
        assert_eq!(complex_wavenumber(w, 1.0, 0.0), Complex64::new(w / C0, 0.0));
        assert_eq!(complex_wavenumber(w, 4.0, 0.0), Complex64::new(2.0 * w / C0, 0.0));
        // hand evaluation: 2π · 349.9e6 / 299792458 · √2.85
        let k = complex_wavenumber(w, 2.85, 0.0);
        assert!((k.re - 12.380_139_487).abs() < 1e-6, "{k}");
        assert_eq!(k.im, 0.0);
    }

    #[test]
    fn lossy_medium_decays() {
        let w = 2.0 * std::f64::consts::PI * 300e6;
        let k = complex_wavenumber(w, 5.0, 1e-2);
        assert!(k.im > 0.0 && k.re > 0.0);
        let eps = (k / (w / C0)).powi(2);
        assert!((eps.re - 5.0).abs() < 1e-12);
        assert!((eps.im - 1e-2 / (w * EPS0)).abs() < 1e-12);
    }
}
