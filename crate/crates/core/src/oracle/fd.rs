/// Central-difference gradient of `f` at `m` with step `h` in every
/// coordinate.
pub fn fd_gradient<F: FnMut(&[f64]) -> f64>(mut f: F, m: &[f64], h: f64) -> Vec<f64> {
    assert!(h > 0.0, "finite-difference step must be positive");
    let mut x = m.to_vec();
    (0..m.len())
        .map(|i| {
            x[i] = m[i] + h;
            let fp = f(&x);
            x[i] = m[i] - h;
            let fm = f(&x);
            x[i] = m[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_and_constant() {
        let m = [0.3, -1.2, 2.0];
        let g = fd_gradient(|x| x.iter().map(|v| v * v).sum(), &m, 1e-3);
        for (g, m) in g.iter().zip(&m) {
            assert!((g - 2.0 * m).abs() < 1e-9);
        }
        assert!(fd_gradient(|_| 4.2, &m, 1e-3).iter().all(|&g| g == 0.0));
    }

    #[test]
    fn second_order_accuracy() {
        let f = |x: &[f64]| x[0].powi(3) + 2.0 * x[0] * x[1];
        let exact = 3.0 * 0.7f64.powi(2) + 2.0 * 0.4;
        let e1 = (fd_gradient(f, &[0.7, 0.4], 1e-2)[0] - exact).abs();
        let e2 = (fd_gradient(f, &[0.7, 0.4], 5e-3)[0] - exact).abs();
        assert!((e1 / e2 - 4.0).abs() < 0.05, "{}", e1 / e2);
    }
}
