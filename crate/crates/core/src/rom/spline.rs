//! Interpolating cubic splines written in cardinal form: the value at `x` is
//! a fixed linear combination of the nodal data, so the same weights serve
//! every coefficient sequence.

use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::{Error, Result};

/// Not-a-knot cubic spline basis on strictly increasing nodes. With the
/// not-a-knot end conditions any cubic polynomial is reproduced exactly.
#[derive(Debug, Clone)]
pub struct CubicBasis {
    nodes: Vec<f64>,
    /// Maps nodal values to nodal second derivatives.
    curvature: Mat<f64>,
}

impl CubicBasis {
    pub fn new(nodes: &[f64]) -> Result<Self> {
        let n = nodes.len();
        if n < 4 {
            return Err(Error::invalid(format!("cubic spline needs at least 4 nodes, got {n}")));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("spline nodes must be strictly increasing (duplicate node?)"));
        }
        let h: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        let mut lhs = Mat::<f64>::zeros(n, n);
        let mut rhs = Mat::<f64>::zeros(n, n);
        // third derivative continuous across the second and penultimate nodes
        lhs[(0, 0)] = -h[1];
        lhs[(0, 1)] = h[0] + h[1];
        lhs[(0, 2)] = -h[0];
        lhs[(n - 1, n - 3)] = -h[n - 2];
        lhs[(n - 1, n - 2)] = h[n - 3] + h[n - 2];
        lhs[(n - 1, n - 1)] = -h[n - 3];
        for i in 1..n - 1 {
            lhs[(i, i - 1)] = h[i - 1];
            lhs[(i, i)] = 2.0 * (h[i - 1] + h[i]);
            lhs[(i, i + 1)] = h[i];
            rhs[(i, i - 1)] = 6.0 / h[i - 1];
            rhs[(i, i)] = -6.0 / h[i - 1] - 6.0 / h[i];
            rhs[(i, i + 1)] = 6.0 / h[i];
        }
        let curvature = lhs.partial_piv_lu().solve(&rhs);
        Ok(Self {
            nodes: nodes.to_vec(),
            curvature,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Weights `w` and `w'` with `s(x) = Σ w_j y_j`, `s'(x) = Σ w'_j y_j`.
    /// Outside the node range the end cubic pieces are continued.
    pub fn weights(&self, x: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.nodes.len();
        let i = self.nodes[1..n - 1].partition_point(|&t| t <= x);
        let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        let mut w = vec![0.0; n];
        let mut dw = vec![0.0; n];
        w[i] += a;
        w[i + 1] += b;
        dw[i] -= 1.0 / h;
        dw[i + 1] += 1.0 / h;
        let ca = (a * a * a - a) * h * h / 6.0;
        let cb = (b * b * b - b) * h * h / 6.0;
        let dca = -(3.0 * a * a - 1.0) * h / 6.0;
        let dcb = (3.0 * b * b - 1.0) * h / 6.0;
        for j in 0..n {
            let (mi, mj) = (self.curvature[(i, j)], self.curvature[(i + 1, j)]);
            w[j] += ca * mi + cb * mj;
            dw[j] += dca * mi + dcb * mj;
        }
        (w, dw)
    }

    pub fn eval(&self, y: &[f64], x: f64) -> (f64, f64) {
        let (w, dw) = self.weights(x);
        let dot = |u: &[f64]| u.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        (dot(&w), dot(&dw))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nodes() -> Vec<f64> {
        vec![0.0, 0.3, 1.0, 1.4, 2.0, 3.1]
    }

    #[test]
    fn interpolates_at_nodes() {
        let b = CubicBasis::new(&nodes()).unwrap();
        for (i, &x) in nodes().iter().enumerate() {
            let (w, _) = b.weights(x);
            for (j, &v) in w.iter().enumerate() {
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reproduces_cubics() {
        let p = |x: f64| 0.7 - 1.3 * x + 0.4 * x * x - 0.25 * x * x * x;
        let dp = |x: f64| -1.3 + 0.8 * x - 0.75 * x * x;
        let b = CubicBasis::new(&nodes()).unwrap();
        let y: Vec<f64> = nodes().iter().map(|&x| p(x)).collect();
        for k in 0..=40 {
            let x = 3.1 * k as f64 / 40.0;
            let (s, ds) = b.eval(&y, x);
            assert!((s - p(x)).abs() < 1e-10);
            assert!((ds - dp(x)).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_has_zero_slope() {
        let b = CubicBasis::new(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        for x in [1.0, 1.7, 3.99] {
            let (s, ds) = b.eval(&[2.5; 4], x);
            assert!((s - 2.5).abs() < 1e-13 && ds.abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_duplicates() {
        assert!(CubicBasis::new(&[0.0, 1.0, 1.0, 2.0]).is_err());
        assert!(CubicBasis::new(&[0.0, 1.0, 2.0]).is_err());
    }
}
