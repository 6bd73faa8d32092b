use std::fs;
use std::path::Path;

use faer::Mat;
use serde::{Deserialize, Serialize};

use super::params::ParameterSpace;
use super::snapshots::RowLayout;
use super::spline::CubicBasis;
use crate::arrayio::{read_array, write_array, Array};
use crate::{Complex64, Error, Result};

/// Truncated SVD `D ≈ H Σ Gᴴ`.
#[derive(Debug, Clone)]
pub struct PodFactors {
    pub h: Mat<Complex64>,
    pub sigma: Vec<f64>,
    pub g: Mat<Complex64>,
    pub alpha: f64,
    /// First discarded singular value (0 when nothing was discarded).
    pub sigma_next: f64,
}

impl PodFactors {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// `H Σ Gᴴ`.
    pub fn reconstruct(&self) -> Mat<Complex64> {
        let hs = Mat::from_fn(self.h.nrows(), self.rank(), |i, k| self.h[(i, k)] * self.sigma[k]);
        &hs * self.g.adjoint()
    }
}

/// Keeps the singular triplets with `σ_k ≥ α σ_1`.
pub fn pod_truncate(d: &Mat<Complex64>, alpha: f64) -> Result<PodFactors> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("truncation threshold must lie in (0, 1], got {alpha}")));
    }
    let svd = d
        .thin_svd()
        .map_err(|e| Error::NotConverged(format!("SVD of snapshot matrix: {e:?}")))?;
    let s: Vec<f64> = (0..d.nrows().min(d.ncols())).map(|k| svd.S()[k].re).collect();
    let s1 = s.first().copied().unwrap_or(0.0);
    if !(s1 > 0.0) {
        return Err(Error::invalid("snapshot matrix is zero: no modes retained (K = 0)"));
    }
    let k = s.iter().take_while(|&&v| v >= alpha * s1 && v > 0.0).count();
    let h = svd.U().subcols(0, k).to_owned();
    let g = svd.V().subcols(0, k).to_owned();
    Ok(PodFactors {
        h,
        sigma: s[..k].to_vec(),
        g,
        alpha,
        sigma_next: s.get(k).copied().unwrap_or(0.0),
    })
}

/// Online surrogate: spline-interpolated POD coefficients over a tensor grid.
#[derive(Debug, Clone)]
pub struct PodModel {
    pub factors: PodFactors,
    pub space: ParameterSpace,
    pub layout: RowLayout,
    bases: Vec<CubicBasis>,
}

/// Evaluation result; `clamped` reports that `m` left the trained box.
#[derive(Debug, Clone)]
pub struct PodValue<T> {
    pub value: T,
    pub clamped: bool,
}

pub fn fit_interpolant(factors: PodFactors, space: ParameterSpace, layout: RowLayout) -> Result<PodModel> {
    if factors.g.nrows() != space.num_nodes() {
        return Err(Error::DimensionMismatch {
            expected: space.num_nodes(),
            got: factors.g.nrows(),
        });
    }
    if factors.h.nrows() != layout.len() {
        return Err(Error::DimensionMismatch {
            expected: layout.len(),
            got: factors.h.nrows(),
        });
    }
    let bases = (0..space.dim())
        .map(|d| CubicBasis::new(&space.axis_nodes(d)))
        .collect::<Result<_>>()?;
    Ok(PodModel {
        factors,
        space,
        layout,
        bases,
    })
}

impl PodModel {
    pub fn len(&self) -> usize {
        self.factors.h.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rank(&self) -> usize {
        self.factors.rank()
    }

    /// Tensor weights over the nodes at `m` and their partial derivatives.
    fn node_weights(&self, m: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>, bool) {
        assert_eq!(m.len(), self.space.dim(), "parameter vector length");
        let (m, clamped) = self.space.clamp(m);
        if clamped {
            log::warn!("parameter {m:?} clamped into the trained range");
        }
        let per_dim: Vec<_> = self.bases.iter().zip(&m).map(|(b, &x)| b.weights(x)).collect();
        let counts: Vec<usize> = self.space.axes.iter().map(|a| a.count).collect();
        let n = self.space.num_nodes();
        let mut w = vec![0.0; n];
        let mut dw = vec![vec![0.0; n]; m.len()];
        let mut idx = vec![0usize; m.len()];
        for flat in 0..n {
            let mut r = flat;
            for d in (0..m.len()).rev() {
                idx[d] = r % counts[d];
                r /= counts[d];
            }
            w[flat] = (0..m.len()).map(|d| per_dim[d].0[idx[d]]).product();
            for (j, dwj) in dw.iter_mut().enumerate() {
                dwj[flat] = (0..m.len())
                    .map(|d| if d == j { per_dim[d].1[idx[d]] } else { per_dim[d].0[idx[d]] })
                    .product();
            }
        }
        (w, dw, clamped)
    }

    /// Interpolated `conj(g(m))`, scaled by Σ.
    fn coefficients(&self, weights: &[f64]) -> Vec<Complex64> {
        (0..self.rank())
            .map(|k| {
                let c: Complex64 = weights.iter().enumerate().map(|(i, &w)| self.factors.g[(i, k)].conj() * w).sum();
                c * self.factors.sigma[k]
            })
            .collect()
    }

    fn expand(&self, c: &[Complex64]) -> Vec<Complex64> {
        let h = &self.factors.h;
        let mut out = vec![Complex64::default(); h.nrows()];
        for (k, &ck) in c.iter().enumerate() {
            let col = h.col(k);
            for (o, &hv) in out.iter_mut().zip(col.iter()) {
                *o += hv * ck;
            }
        }
        out
    }

    /// Snapshot-space field `H Σ conj(g(m))`. Outside the trained box the
    /// parameter is clamped and the flag set.
    pub fn evaluate(&self, m: &[f64]) -> PodValue<Vec<Complex64>> {
        let (w, _, clamped) = self.node_weights(m);
        PodValue {
            value: self.expand(&self.coefficients(&w)),
            clamped,
        }
    }

    /// `∂u/∂m_j` for each parameter. When clamped this is the derivative of
    /// the spline at the clamped point, so the outer optimiser still sees a
    /// restoring slope at the edge of the box.
    pub fn gradient(&self, m: &[f64]) -> PodValue<Vec<Vec<Complex64>>> {
        let (_, dw, clamped) = self.node_weights(m);
        PodValue {
            value: dw.iter().map(|d| self.expand(&self.coefficients(d))).collect(),
            clamped,
        }
    }

    /// Field and gradient together (shares the tensor weights).
    pub fn evaluate_with_gradient(&self, m: &[f64]) -> PodValue<(Vec<Complex64>, Vec<Vec<Complex64>>)> {
        let (w, dw, clamped) = self.node_weights(m);
        let u = self.expand(&self.coefficients(&w));
        let du = dw.iter().map(|d| self.expand(&self.coefficients(d))).collect();
        PodValue { value: (u, du), clamped }
    }

    pub fn save(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        write_array(dir.join(format!("{stem}.h.twsr")), &Array::from_mat(&self.factors.h))?;
        write_array(dir.join(format!("{stem}.g.twsr")), &Array::from_mat(&self.factors.g))?;
        write_array(
            dir.join(format!("{stem}.sigma.twsr")),
            &Array::real(vec![self.rank()], self.factors.sigma.clone())?,
        )?;
        let side = Sidecar {
            alpha: self.factors.alpha,
            sigma_next: self.factors.sigma_next,
            rank: self.rank(),
            rows: self.len(),
            nodes: self.space.nodes(),
            space: self.space.clone(),
            layout: self.layout,
        };
        let text = toml::to_string(&side).map_err(|e| Error::Format(e.to_string()))?;
        fs::write(dir.join(format!("{stem}.toml")), text)?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>, stem: &str) -> Result<Self> {
        let dir = dir.as_ref();
        let text = fs::read_to_string(dir.join(format!("{stem}.toml")))?;
        let side: Sidecar = toml::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
        let h = read_array(dir.join(format!("{stem}.h.twsr")))?.to_mat()?;
        let g = read_array(dir.join(format!("{stem}.g.twsr")))?.to_mat()?;
        let sigma = read_array(dir.join(format!("{stem}.sigma.twsr")))?.into_real()?;
        if sigma.len() != side.rank || h.ncols() != side.rank || g.ncols() != side.rank || h.nrows() != side.rows {
            return Err(Error::Format(format!("{stem}: array shapes disagree with sidecar")));
        }
        let factors = PodFactors {
            h,
            sigma,
            g,
            alpha: side.alpha,
            sigma_next: side.sigma_next,
        };
        fit_interpolant(factors, side.space, side.layout)
    }
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    alpha: f64,
    sigma_next: f64,
    rank: usize,
    rows: usize,
    space: ParameterSpace,
    layout: RowLayout,
    nodes: Vec<Vec<f64>>,
}
