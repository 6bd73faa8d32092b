//! Quadrature rules for triangles and triangle pairs.
//!
//! Triangles are parametrised over the reference element
//! `T = {(s, t) : 0 <= t <= s <= 1}` via `x = p0 + s (p1 - p0) + t (p2 - p1)`,
//! which maps (0,0), (1,0), (1,1) to p0, p1, p2. The corresponding linear
//! shape functions are `1 - s`, `s - t` and `t`.

/// Gauss–Legendre nodes and weights on [0, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Legendre order must be at least one");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = nf * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        // map [-1, 1] to [0, 1]
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        let wi = 1.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Points `(s, t)` and weights of a rule on the reference triangle. Weights
/// sum to the reference area ½.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Symmetric six-point rule, exact for polynomials of degree four.
    pub fn dunavant6() -> Self {
        let (a1, b1, w1) = (0.445_948_490_915_965, 0.108_103_018_168_070, 0.223_381_589_678_011);
        let (a2, b2, w2) = (0.091_576_213_509_771, 0.816_847_572_980_459, 0.109_951_743_655_322);
        // barycentric triples (λ0, λ1, λ2)
        let bary = [
            (a1, a1, b1, w1),
            (a1, b1, a1, w1),
            (b1, a1, a1, w1),
            (a2, a2, b2, w2),
            (a2, b2, a2, w2),
            (b2, a2, a2, w2),
        ];
        Self::from_barycentric(&bary)
    }

    /// Collapsed (Duffy) tensor Gauss rule with `n²` points, exact for
    /// polynomials of degree `2n - 2`.
    pub fn collapsed_gauss(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let s = x[i];
                points.push([s, s * x[j]]);
                weights.push(w[i] * w[j] * s);
            }
        }
        Self { points, weights }
    }

    fn from_barycentric(bary: &[(f64, f64, f64, f64)]) -> Self {
        // λ1 = s - t, λ2 = t
        let points = bary.iter().map(|&(_, l1, l2, _)| [l1 + l2, l2]).collect();
        let weights = bary.iter().map(|&(.., w)| 0.5 * w).collect();
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Linear shape function values at reference point `(s, t)`.
#[inline]
pub fn shape(p: [f64; 2]) -> [f64; 3] {
    [1.0 - p[0], p[0] - p[1], p[1]]
}

/// How two triangles touch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    Coincident,
    /// Shared edge: both triangles are reordered so that the edge is their
    /// local `p0 p1`.
    Edge,
    /// Shared vertex: both triangles are reordered so that it is their `p0`.
    Vertex,
    Regular,
}

/// Point pairs `(x̂, ŷ)` on the reference triangle with weights, for the
/// singular cases. Weights include all Jacobians of the reference map, so
/// `Σ w f(x̂, ŷ) ≈ ∫_T ∫_T f`.
#[derive(Debug, Clone)]
pub struct PairRule {
    pub x: Vec<[f64; 2]>,
    pub y: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl PairRule {
    /// Regularising coordinate transforms of Sauter and Schwab with `n`
    /// Gauss points in each of the four hypercube directions.
    pub fn sauter_schwab(kind: PairKind, n: usize) -> Self {
        let (g, gw) = gauss_legendre(n);
        let mut rule = PairRule {
            x: Vec::new(),
            y: Vec::new(),
            weights: Vec::new(),
        };
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let (xi, e1, e2, e3) = (g[a], g[b], g[c], g[d]);
                        let w = gw[a] * gw[b] * gw[c] * gw[d];
                        match kind {
                            PairKind::Coincident => {
                                let w = w * xi.powi(3) * e1 * e1 * e2;
                                let regions = [
                                    ([xi, xi * (1.0 - e1 + e1 * e2)], [xi * (1.0 - e1 * e2 * e3), xi * (1.0 - e1)]),
                                    ([xi * (1.0 - e1 * e2 * e3), xi * (1.0 - e1)], [xi, xi * (1.0 - e1 + e1 * e2)]),
                                    ([xi, xi * e1 * (1.0 - e2 + e2 * e3)], [xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)]),
                                    ([xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)], [xi, xi * e1 * (1.0 - e2 + e2 * e3)]),
                                    ([xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3)], [xi, xi * e1 * (1.0 - e2)]),
                                    ([xi, xi * e1 * (1.0 - e2)], [xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3)]),
                                ];
                                for (x, y) in regions {
                                    rule.push(x, y, w);
                                }
                            }
                            PairKind::Edge => {
                                let w0 = w * xi.powi(3) * e1 * e1;
                                rule.push([xi, xi * e1 * e3], [xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)], w0);
                                let w1 = w0 * e2;
                                rule.push([xi, xi * e1], [xi * (1.0 - e1 * e2 * e3), xi * e1 * e2 * (1.0 - e3)], w1);
                                rule.push([xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)], [xi, xi * e1 * e2 * e3], w1);
                                rule.push([xi * (1.0 - e1 * e2 * e3), xi * e1 * e2 * (1.0 - e3)], [xi, xi * e1], w1);
                                rule.push([xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3)], [xi, xi * e1 * e2], w1);
                            }
                            PairKind::Vertex => {
                                let w = w * xi.powi(3) * e2;
                                rule.push([xi, xi * e1], [xi * e2, xi * e2 * e3], w);
                                rule.push([xi * e2, xi * e2 * e3], [xi, xi * e1], w);
                            }
                            PairKind::Regular => unreachable!("regular pairs use tensor rules"),
                        }
                    }
                }
            }
        }
        rule
    }

    fn push(&mut self, x: [f64; 2], y: [f64; 2], w: f64) {
        self.x.push(x);
        self.y.push(y);
        self.weights.push(w);
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Quadrature orders used in operator assembly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Gauss points per hypercube direction for touching pairs.
    pub singular_order: usize,
    /// Collapsed-Gauss order per direction for close, non-touching pairs;
    /// `None` uses the six-point rule for those too.
    pub near_order: Option<usize>,
    /// Collapsed-Gauss order for well separated pairs; `None` selects the
    /// six-point rule.
    pub far_order: Option<usize>,
    /// Pairs whose centroid distance is below this multiple of the larger
    /// triangle diameter count as close.
    pub near_factor: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            singular_order: 4,
            near_order: Some(4),
            far_order: None,
            near_factor: 2.0,
        }
    }
}

impl QuadratureConfig {
    /// Every rule replaced by a collapsed or hypercube Gauss rule of order
    /// `n`, used for self-convergence checks.
    pub fn uniform(n: usize) -> Self {
        Self {
            singular_order: n,
            near_order: Some(n),
            far_order: Some(n),
            near_factor: 2.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn monomial(p: [f64; 2], a: i32, b: i32) -> f64 {
        p[0].powi(a) * p[1].powi(b)
    }

    // ∫_T s^a t^b = 1 / ((b + 1)(a + b + 2))
    fn exact(a: i32, b: i32) -> f64 {
        1.0 / (((b + 1) * (a + b + 2)) as f64)
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(5);
        for d in 0..10 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d)).sum();
            assert!((q - 1.0 / (d + 1) as f64).abs() < 1e-14, "degree {d}");
        }
    }

    #[test]
    fn triangle_rules_integrate_polynomials() {
        let d6 = TriangleRule::dunavant6();
        let cg = TriangleRule::collapsed_gauss(4);
        for a in 0..5 {
            for b in 0..5 - a {
                let q: f64 = d6.points.iter().zip(&d6.weights).map(|(p, w)| w * monomial(*p, a, b)).sum();
                assert!((q - exact(a, b)).abs() < 1e-12, "six-point s^{a} t^{b}");
            }
        }
        for a in 0..7 {
            for b in 0..7 - a {
                let q: f64 = cg.points.iter().zip(&cg.weights).map(|(p, w)| w * monomial(*p, a, b)).sum();
                assert!((q - exact(a, b)).abs() < 1e-13, "collapsed s^{a} t^{b}");
            }
        }
    }

    #[test]
    fn pair_rules_integrate_polynomial_moments() {
        for kind in [PairKind::Coincident, PairKind::Edge, PairKind::Vertex] {
            let rule = PairRule::sauter_schwab(kind, 5);
            for (a, b, c, d) in [(0, 0, 0, 0), (1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1), (2, 1, 0, 1), (1, 1, 1, 1), (0, 2, 2, 0)] {
                let q: f64 = (0..rule.len())
                    .map(|i| rule.weights[i] * monomial(rule.x[i], a, b) * monomial(rule.y[i], c, d))
                    .sum();
                let e = exact(a, b) * exact(c, d);
                assert!((q - e).abs() < 1e-12, "{kind:?} moment {a}{b}{c}{d}: {q} vs {e}");
            }
        }
    }
}
