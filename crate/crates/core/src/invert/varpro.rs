use std::fmt::Write as _;

use faer::Mat;

use super::bfgs::{bfgs_minimize, spd_inverse, OuterConfig, OuterStop};
use super::fista::{fista, power_method_norm, FistaResult, InnerConfig};
use super::prox::regularizer_value;
use crate::forward::{norm, ForwardOperator, ThroughWallModel};
use crate::{Complex64, Error, Result};

/// Reflectivity estimate `v̄(m)` and its fit.
#[derive(Debug, Clone)]
pub struct InnerSolution {
    pub v: Vec<Complex64>,
    /// `F₀ + A v̄ − d` (without `F₀` when the direct return is excluded).
    pub residual: Vec<Complex64>,
    /// `½‖residual‖² + λ R(|v̄|)`.
    pub objective: f64,
    pub lipschitz: f64,
    pub fista: FistaResult,
}

/// Reduced objective, its gradient and the residual Jacobian at `m`.
#[derive(Debug, Clone)]
pub struct ReducedEvaluation {
    pub objective: f64,
    pub gradient: Vec<f64>,
    /// Columns `∂F₀/∂m_j + (∂A/∂m_j) v̄`.
    pub jacobian: Vec<Vec<Complex64>>,
    pub inner: InnerSolution,
}

/// Variable-projection problem over the wall parameters.
pub struct VarPro<'a> {
    pub model: &'a ThroughWallModel,
    pub data: &'a [Complex64],
    /// Whether the data contain the direct wall return `F₀`.
    pub include_f0: bool,
    pub inner: InnerConfig,
}

impl VarPro<'_> {
    fn target(&self, m: &[f64]) -> Vec<Complex64> {
        if self.include_f0 {
            let f0 = self.model.direct(m);
            self.data.iter().zip(&f0.samples).map(|(d, f)| d - f).collect()
        } else {
            self.data.to_vec()
        }
    }

    fn check(&self, m: &[f64]) -> Result<()> {
        if m.len() != self.model.num_params() {
            return Err(Error::DimensionMismatch {
                expected: self.model.num_params(),
                got: m.len(),
            });
        }
        if self.data.len() != self.model.acq.num_samples() {
            return Err(Error::DimensionMismatch {
                expected: self.model.acq.num_samples(),
                got: self.data.len(),
            });
        }
        Ok(())
    }

    fn inner_with(&self, op: &ForwardOperator, m: &[f64], warm: Option<&[Complex64]>) -> Result<InnerSolution> {
        let b = self.target(m);
        let lipschitz = match self.inner.lipschitz {
            Some(l) => l,
            None => power_method_norm(op, self.inner.power_iter)?.powi(2),
        };
        let cfg = InnerConfig {
            lipschitz: Some(lipschitz),
            ..self.inner
        };
        let res = fista(op, &b, self.model.grid.nx, &cfg, warm)?;
        let residual: Vec<Complex64> = op.apply(&res.v)?.iter().zip(&b).map(|(a, b)| a - b).collect();
        let objective = 0.5 * norm(&residual).powi(2) + self.inner.lambda_v * regularizer_value(&res.v, self.model.grid.nx, self.inner.regularizer);
        Ok(InnerSolution {
            v: res.v.clone(),
            residual,
            objective,
            lipschitz,
            fista: res,
        })
    }

    /// `v̄(m)`: assembles `A(m)`, removes `F₀(m)` from the data when
    /// present and runs FISTA from `warm`.
    pub fn solve_inner(&self, m: &[f64], warm: Option<&[Complex64]>) -> Result<InnerSolution> {
        self.check(m)?;
        self.inner_with(&self.model.operator(m), m, warm)
    }

    /// `J̄(m)` and `∇J̄_j = Re⟨∂F₀/∂m_j + (∂A/∂m_j) v̄, F₀ + A v̄ − d⟩`. The
    /// implicit dependence of `v̄` on `m` drops out at an exact inner
    /// minimiser, so accuracy follows the inner tolerance.
    pub fn reduced_objective_gradient(&self, m: &[f64], warm: Option<&[Complex64]>) -> Result<ReducedEvaluation> {
        self.check(m)?;
        let (op, d_ops) = self.model.operator_with_gradient(m);
        let inner = self.inner_with(&op, m, warm)?;
        let df0 = if self.include_f0 { Some(self.model.direct_gradient(m)) } else { None };
        let mut jacobian = Vec::with_capacity(d_ops.len());
        for (j, da) in d_ops.iter().enumerate() {
            let dav = da * faer::col::ColRef::from_slice(&inner.v);
            let mut col: Vec<Complex64> = dav.iter().copied().collect();
            if let Some(df0) = &df0 {
                col.iter_mut().zip(&df0[j]).for_each(|(a, b)| *a += b);
            }
            jacobian.push(col);
        }
        let gradient = jacobian
            .iter()
            .map(|c| c.iter().zip(&inner.residual).map(|(a, r)| (a.conj() * r).re).sum())
            .collect();
        Ok(ReducedEvaluation {
            objective: inner.objective,
            gradient,
            jacobian,
            inner,
        })
    }
}

/// `(Re J₀ᴴJ₀)⁻¹`, falling back to a scaled identity when singular.
pub fn gauss_newton_inverse(jacobian: &[Vec<Complex64>], gradient: &[f64]) -> Mat<f64> {
    let n = jacobian.len();
    let jtj = Mat::from_fn(n, n, |a, b| jacobian[a].iter().zip(&jacobian[b]).map(|(x, y)| (x.conj() * y).re).sum::<f64>());
    spd_inverse(&jtj).unwrap_or_else(|| {
        log::warn!("singular Gauss-Newton matrix; starting BFGS from a scaled identity");
        let g = gradient.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        Mat::<f64>::identity(n, n) * (1.0 / g)
    })
}

#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub iteration: usize,
    pub m: Vec<f64>,
    pub objective: f64,
    pub gradient_norm: f64,
    pub inner_iterations: usize,
    pub step_length: f64,
    pub inner_history: Vec<f64>,
}

/// Accepted outer iterates of a reconstruction.
#[derive(Debug, Clone, Default)]
pub struct ReconstructionTrace {
    pub records: Vec<TraceRecord>,
}

impl ReconstructionTrace {
    pub fn to_csv(&self) -> String {
        let dim = self.records.first().map_or(0, |r| r.m.len());
        let mut out = String::from("iteration");
        for j in 0..dim {
            let _ = write!(out, ",m{j}");
        }
        out.push_str(",objective,gradient_norm,inner_iterations,step_length\n");
        for r in &self.records {
            let _ = write!(out, "{}", r.iteration);
            for v in &r.m {
                let _ = write!(out, ",{v:.17e}");
            }
            let _ = writeln!(out, ",{:.17e},{:.17e},{},{}", r.objective, r.gradient_norm, r.inner_iterations, r.step_length);
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub m: Vec<f64>,
    pub v: Vec<Complex64>,
    pub objective: f64,
    pub trace: ReconstructionTrace,
    pub stop: OuterStop,
}

/// Outer BFGS over the wall parameters with `H₀ = (Re J₀ᴴJ₀)⁻¹` from the
/// residual Jacobian at `m0`.
pub fn bfgs_outer(problem: &VarPro, outer: &OuterConfig) -> Result<Reconstruction> {
    let m0 = &outer.m0;
    let first = problem.reduced_objective_gradient(m0, None)?;
    let h0 = gauss_newton_inverse(&first.jacobian, &first.gradient);
    let scale = 0.5 * norm(problem.data).powi(2);
    let mut first = Some(first);
    let res = bfgs_minimize(
        |m, cur: Option<&ReducedEvaluation>| {
            let e = match (first.take(), cur) {
                (Some(e), None) => e,
                _ => problem.reduced_objective_gradient(m, cur.map(|c| c.inner.v.as_slice()))?,
            };
            Ok((e.objective, e.gradient.clone(), e))
        },
        m0,
        h0,
        outer,
        scale,
    )?;
    let trace = ReconstructionTrace {
        records: res
            .records
            .iter()
            .map(|r| TraceRecord {
                iteration: r.iteration,
                m: r.m.clone(),
                objective: r.objective,
                gradient_norm: r.gradient.iter().map(|g| g * g).sum::<f64>().sqrt(),
                inner_iterations: r.aux.inner.fista.iterations,
                step_length: r.step_length,
                inner_history: r.aux.inner.fista.objective_history.clone(),
            })
            .collect(),
    };
    let last = res.last();
    Ok(Reconstruction {
        m: last.m.clone(),
        v: last.aux.inner.v.clone(),
        objective: last.objective,
        trace,
        stop: res.stop,
    })
}
