use faer::linalg::solvers::Solve;
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OuterConfig {
    pub m0: Vec<f64>,
    pub max_iter: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo_c: f64,
    pub max_halvings: usize,
    /// Stop when the quasi-Newton decrement `gᵀHg` falls below this
    /// fraction of the objective scale.
    pub decrement_tol: f64,
    /// Relative step (fraction of each parameter range) for finite-difference
    /// cross-checks of the Jacobian.
    pub fd_step: f64,
}

impl Default for OuterConfig {
    fn default() -> Self {
        Self {
            m0: Vec::new(),
            max_iter: 10,
            armijo_c: 1e-4,
            max_halvings: 30,
            decrement_tol: 1e-10,
            fd_step: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterStop {
    Converged,
    MaxIterations,
    LineSearchFailed,
}

/// One accepted point of the outer iteration (iteration 0 is the start).
#[derive(Debug, Clone)]
pub struct OuterRecord<T> {
    pub iteration: usize,
    pub m: Vec<f64>,
    pub objective: f64,
    pub gradient: Vec<f64>,
    pub step_length: f64,
    pub evaluations: usize,
    pub aux: T,
}

#[derive(Debug, Clone)]
pub struct BfgsResult<T> {
    pub records: Vec<OuterRecord<T>>,
    pub stop: OuterStop,
}

impl<T> BfgsResult<T> {
    pub fn last(&self) -> &OuterRecord<T> {
        self.records.last().expect("at least the starting point")
    }
}

/// Inverse of a small symmetric positive definite matrix, or `None`.
pub fn spd_inverse(a: &Mat<f64>) -> Option<Mat<f64>> {
    let n = a.nrows();
    let llt = a.llt(faer::Side::Lower).ok()?;
    let inv = llt.solve(Mat::<f64>::identity(n, n));
    let finite = (0..n).all(|i| (0..n).all(|j| inv[(i, j)].is_finite()));
    finite.then_some(inv)
}

fn mat_vec(h: &Mat<f64>, g: &[f64]) -> Vec<f64> {
    (0..h.nrows()).map(|i| (0..h.ncols()).map(|j| h[(i, j)] * g[j]).sum()).collect()
}

fn dotf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Full-memory BFGS with Armijo backtracking (halving). `f(m, current)`
/// returns the objective, its gradient and auxiliary state; `current` is the
/// state at the last accepted point (for warm starts). `scale` sets the
/// absolute size of the decrement tolerance.
pub fn bfgs_minimize<T, F>(mut f: F, m0: &[f64], h0: Mat<f64>, cfg: &OuterConfig, scale: f64) -> Result<BfgsResult<T>>
where
    F: FnMut(&[f64], Option<&T>) -> Result<(f64, Vec<f64>, T)>,
{
    let n = m0.len();
    if h0.nrows() != n || h0.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: h0.nrows() });
    }
    if cfg.max_iter == 0 {
        return Err(Error::invalid("outer iteration cap must be at least 1"));
    }
    let (j0, g0, aux0) = f(m0, None)?;
    let mut records = vec![OuterRecord {
        iteration: 0,
        m: m0.to_vec(),
        objective: j0,
        gradient: g0,
        step_length: 0.0,
        evaluations: 1,
        aux: aux0,
    }];
    let mut h = h0;
    let tol = cfg.decrement_tol * scale;
    for it in 1..=cfg.max_iter {
        let cur = records.last().unwrap();
        let mut p = mat_vec(&h, &cur.gradient);
        p.iter_mut().for_each(|v| *v = -*v);
        let mut slope = dotf(&cur.gradient, &p);
        if slope >= 0.0 {
            // lost descent: restart from steepest descent
            h = Mat::identity(n, n);
            p = cur.gradient.iter().map(|g| -g).collect();
            slope = dotf(&cur.gradient, &p);
        }
        if -slope <= tol {
            return Ok(BfgsResult {
                records,
                stop: OuterStop::Converged,
            });
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        let mut evals = 0;
        for _ in 0..=cfg.max_halvings {
            let m: Vec<f64> = cur.m.iter().zip(&p).map(|(m, p)| m + alpha * p).collect();
            let (j, g, aux) = f(&m, Some(&cur.aux))?;
            evals += 1;
            if j.is_finite() && j <= cur.objective + cfg.armijo_c * alpha * slope {
                accepted = Some((m, j, g, aux));
                break;
            }
            alpha *= 0.5;
        }
        let Some((m, j, g, aux)) = accepted else {
            return Ok(BfgsResult {
                records,
                stop: OuterStop::LineSearchFailed,
            });
        };
        let s: Vec<f64> = m.iter().zip(&cur.m).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g.iter().zip(&cur.gradient).map(|(a, b)| a - b).collect();
        let ys = dotf(&y, &s);
        if ys > 0.0 {
            let rho = 1.0 / ys;
            let hy = mat_vec(&h, &y);
            let yhy = dotf(&y, &hy);
            let mut next = h.clone();
            for a in 0..n {
                for b in 0..n {
                    next[(a, b)] += -rho * (s[a] * hy[b] + hy[a] * s[b]) + (rho * rho * yhy + rho) * s[a] * s[b];
                }
            }
            h = next;
        }
        records.push(OuterRecord {
            iteration: it,
            m,
            objective: j,
            gradient: g,
            step_length: alpha,
            evaluations: evals,
            aux,
        });
    }
    Ok(BfgsResult {
        records,
        stop: OuterStop::MaxIterations,
    })
}
