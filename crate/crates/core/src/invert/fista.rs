use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::prox::{prox, regularizer_value, Regularizer};
use crate::forward::{norm, ForwardOperator};
use crate::{Complex64, Error, Result};

/// Settings of the inner reflectivity solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InnerConfig {
    pub lambda_v: f64,
    pub regularizer: Regularizer,
    pub max_iter: usize,
    pub r_tol: f64,
    pub v_tol: f64,
    pub tv_inner_iter: usize,
    /// Lipschitz constant `‖A‖²` of the misfit gradient; estimated with the
    /// power method when absent.
    pub lipschitz: Option<f64>,
    pub power_iter: usize,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self {
            lambda_v: 0.0,
            regularizer: Regularizer::Tv,
            max_iter: 500,
            r_tol: 1e-6,
            v_tol: 1e-8,
            tv_inner_iter: 20,
            lipschitz: None,
            power_iter: 100,
        }
    }
}

impl InnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_v >= 0.0) || !(self.r_tol >= 0.0) || !(self.v_tol >= 0.0) || self.max_iter == 0 {
            return Err(Error::invalid(format!("bad inner solver settings: {self:?}")));
        }
        Ok(())
    }
}

/// Power-method estimate of `‖A‖₂` from a fixed pseudo-random start. The
/// estimate `‖A x_k‖/‖x_k‖` with `x_k = (AᴴA)^k x_0` never decreases in `k`.
pub fn power_method_norm(op: &ForwardOperator, iters: usize) -> Result<f64> {
    if iters == 0 {
        return Err(Error::invalid("power method needs at least one iteration"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x: Vec<Complex64> = (0..op.num_pixels())
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let mut est = 0.0;
    for _ in 0..iters {
        let nx = norm(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        let ax = op.apply(&x)?;
        est = norm(&ax);
        if est == 0.0 {
            return Err(Error::invalid("power method on a zero operator"));
        }
        x = op.adjoint(&ax)?;
    }
    Ok(est)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ObjectiveTolerance,
    IterateTolerance,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct FistaResult {
    /// Best iterate seen.
    pub v: Vec<Complex64>,
    pub objective: f64,
    pub iterations: usize,
    pub stop: StopReason,
    /// Best-so-far objective after each iteration (non-increasing).
    pub objective_history: Vec<f64>,
    /// `‖A v − b‖ / ‖b‖` of the best iterate after each iteration.
    pub misfit_history: Vec<f64>,
}

/// `½‖A v − b‖² + λ R(|v|)`.
pub fn inner_objective(op: &ForwardOperator, b: &[Complex64], v: &[Complex64], nx: usize, cfg: &InnerConfig) -> Result<f64> {
    let r: Vec<Complex64> = op.apply(v)?.iter().zip(b).map(|(a, b)| a - b).collect();
    Ok(0.5 * norm(&r).powi(2) + cfg.lambda_v * regularizer_value(v, nx, cfg.regularizer))
}

/// FISTA for `½‖A v − b‖² + λ R(|v|)` with step `1/L`. Halts when the
/// relative objective change falls below `r_tol`, the relative squared
/// iterate change below `v_tol`, or after `max_iter` iterations, and returns
/// the best iterate.
pub fn fista(op: &ForwardOperator, b: &[Complex64], nx: usize, cfg: &InnerConfig, v0: Option<&[Complex64]>) -> Result<FistaResult> {
    cfg.validate()?;
    let n = op.num_pixels();
    let lip = match cfg.lipschitz {
        Some(l) => l,
        None => power_method_norm(op, cfg.power_iter)?.powi(2),
    };
    if !(lip > 0.0 && lip.is_finite()) {
        return Err(Error::invalid(format!("bad Lipschitz constant {lip}")));
    }
    let b_norm = norm(b).max(f64::MIN_POSITIVE);
    let objective = |v: &[Complex64], av: &[Complex64]| {
        let fit: f64 = av.iter().zip(b).map(|(a, b)| (a - b).norm_sqr()).sum();
        (0.5 * fit + cfg.lambda_v * regularizer_value(v, nx, cfg.regularizer), fit.sqrt() / b_norm)
    };

    let mut x = match v0 {
        Some(v) if v.len() == n => v.to_vec(),
        Some(v) => return Err(Error::DimensionMismatch { expected: n, got: v.len() }),
        None => vec![Complex64::default(); n],
    };
    let (mut j_prev, mut best_misfit) = objective(&x, &op.apply(&x)?);
    let mut best = (x.clone(), j_prev);
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut hist = Vec::new();
    let mut misfit = Vec::new();
    let mut stop = StopReason::MaxIterations;

    for _ in 0..cfg.max_iter {
        let r: Vec<Complex64> = op.apply(&y)?.iter().zip(b).map(|(a, b)| a - b).collect();
        let g = op.adjoint(&r)?;
        let step: Vec<Complex64> = y.iter().zip(&g).map(|(y, g)| y - g / lip).collect();
        let x_new = prox(cfg.regularizer, &step, nx, cfg.lambda_v / lip, cfg.tv_inner_iter);
        let (j, mis) = objective(&x_new, &op.apply(&x_new)?);
        if !j.is_finite() {
            return Err(Error::NotConverged(format!("FISTA objective became {j} (step size 1/{lip:e})")));
        }
        if j < best.1 {
            best = (x_new.clone(), j);
            best_misfit = mis;
        }
        hist.push(best.1);
        misfit.push(best_misfit);

        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let mom = (t - 1.0) / t_new;
        y = x_new.iter().zip(&x).map(|(a, b)| a + (a - b) * mom).collect();
        let dv: f64 = x_new.iter().zip(&x).map(|(a, b)| (a - b).norm_sqr()).sum();
        let vv: f64 = x.iter().map(|a| a.norm_sqr()).sum();
        let dj = (j_prev - j).abs();
        x = x_new;
        t = t_new;
        if dv < cfg.v_tol * vv {
            stop = StopReason::IterateTolerance;
            break;
        }
        if j_prev == 0.0 || dj < cfg.r_tol * j_prev {
            stop = StopReason::ObjectiveTolerance;
            break;
        }
        j_prev = j;
    }
    Ok(FistaResult {
        v: best.0,
        objective: best.1,
        iterations: hist.len(),
        stop,
        objective_history: hist,
        misfit_history: misfit,
    })
}
