use serde::{Deserialize, Serialize};

use crate::geometry::WallParams;
use crate::{Error, Result};

/// A wall property that the reduced model may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WallParameter {
    EpsilonR,
    Sigma,
    Thickness,
    OffsetX,
    OffsetY,
}

impl WallParameter {
    pub fn get(self, w: &WallParams) -> f64 {
        match self {
            WallParameter::EpsilonR => w.epsilon_r,
            WallParameter::Sigma => w.sigma,
            WallParameter::Thickness => w.thickness,
            WallParameter::OffsetX => w.origin_offset[0],
            WallParameter::OffsetY => w.origin_offset[1],
        }
    }

    pub fn set(self, w: &mut WallParams, v: f64) {
        match self {
            WallParameter::EpsilonR => w.epsilon_r = v,
            WallParameter::Sigma => w.sigma = v,
            WallParameter::Thickness => w.thickness = v,
            WallParameter::OffsetX => w.origin_offset[0] = v,
            WallParameter::OffsetY => w.origin_offset[1] = v,
        }
    }

    /// Does changing this parameter change the mesh?
    pub fn is_geometric(self) -> bool {
        !matches!(self, WallParameter::EpsilonR | WallParameter::Sigma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamAxis {
    pub parameter: WallParameter,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Tensor-product training grid over the varying wall parameters. Every
/// other property is taken from `base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpace {
    pub base: WallParams,
    pub axes: Vec<ParamAxis>,
}

impl ParameterSpace {
    pub fn new(base: WallParams, axes: Vec<ParamAxis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::invalid("parameter space needs at least one varying axis"));
        }
        for (i, a) in axes.iter().enumerate() {
            if axes[..i].iter().any(|b| b.parameter == a.parameter) {
                return Err(Error::invalid(format!("{:?} listed twice", a.parameter)));
            }
            if a.count < 4 {
                return Err(Error::invalid(format!(
                    "{:?}: cubic interpolation needs at least 4 nodes, got {}",
                    a.parameter, a.count
                )));
            }
            if !(a.lo < a.hi) {
                return Err(Error::invalid(format!("{:?}: empty range [{}, {}]", a.parameter, a.lo, a.hi)));
            }
        }
        let space = Self { base, axes };
        for m in [space.lower(), space.upper()] {
            space.wall(&m).validate()?;
        }
        Ok(space)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn lower(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a.lo).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a.hi).collect()
    }

    pub fn axis_nodes(&self, d: usize) -> Vec<f64> {
        let a = &self.axes[d];
        linspace(a.lo, a.hi, a.count)
    }

    pub fn num_nodes(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    /// Training nodes in row-major order (last axis fastest).
    pub fn nodes(&self) -> Vec<Vec<f64>> {
        let bounds: Vec<_> = self.axes.iter().map(|a| (a.lo, a.hi)).collect();
        let counts: Vec<_> = self.axes.iter().map(|a| a.count).collect();
        sample_parameter_grid(&bounds, &counts).expect("validated in new")
    }

    pub fn wall(&self, m: &[f64]) -> WallParams {
        let mut w = self.base;
        for (a, &v) in self.axes.iter().zip(m) {
            a.parameter.set(&mut w, v);
        }
        w
    }

    /// Coordinates of `wall` in this space.
    pub fn coordinates(&self, wall: &WallParams) -> Vec<f64> {
        self.axes.iter().map(|a| a.parameter.get(wall)).collect()
    }

    /// Clamps `m` into the trained box; the flag reports whether any
    /// coordinate moved.
    pub fn clamp(&self, m: &[f64]) -> (Vec<f64>, bool) {
        let mut moved = false;
        let c = self
            .axes
            .iter()
            .zip(m)
            .map(|(a, &v)| {
                let c = v.clamp(a.lo, a.hi);
                moved |= c != v;
                c
            })
            .collect();
        (c, moved)
    }

    /// Range of each axis, used to scale finite-difference steps.
    pub fn ranges(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a.hi - a.lo).collect()
    }
}

pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect()
}

/// Tensor-product grid, row-major with the last coordinate fastest. A count
/// of 1 pins that coordinate at its lower bound; varying coordinates need at
/// least 4 nodes for cubic interpolation.
pub fn sample_parameter_grid(bounds: &[(f64, f64)], counts: &[usize]) -> Result<Vec<Vec<f64>>> {
    if bounds.len() != counts.len() {
        return Err(Error::DimensionMismatch {
            expected: bounds.len(),
            got: counts.len(),
        });
    }
    for (d, (&(lo, hi), &n)) in bounds.iter().zip(counts).enumerate() {
        if n == 0 || (2..4).contains(&n) {
            return Err(Error::invalid(format!("dimension {d}: {n} nodes, need 1 or at least 4")));
        }
        if n > 1 && !(lo < hi) {
            return Err(Error::invalid(format!("dimension {d}: empty range [{lo}, {hi}]")));
        }
    }
    let axes: Vec<Vec<f64>> = bounds.iter().zip(counts).map(|(&(lo, hi), &n)| linspace(lo, hi, n)).collect();
    let total: usize = counts.iter().product();
    Ok((0..total)
        .map(|mut flat| {
            let mut m = vec![0.0; axes.len()];
            for d in (0..axes.len()).rev() {
                m[d] = axes[d][flat % counts[d]];
                flat /= counts[d];
            }
            m
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permittivity_grid() {
        let g = sample_parameter_grid(&[(1.5, 3.5)], &[9]).unwrap();
        assert_eq!(g.len(), 9);
        for (i, m) in g.iter().enumerate() {
            assert!((m[0] - (1.5 + 0.25 * i as f64)).abs() < 1e-15);
        }
    }

    #[test]
    fn fixed_dimension_is_constant() {
        let g = sample_parameter_grid(&[(0.1, 0.1), (1.0, 2.0)], &[1, 4]).unwrap();
        assert!(g.iter().all(|m| m[0] == 0.1));
    }

    #[test]
    fn two_dims_row_major() {
        let g = sample_parameter_grid(&[(0.0, 4.0), (10.0, 14.0)], &[5, 5]).unwrap();
        assert_eq!(g.len(), 25);
        assert_eq!(g[1], vec![0.0, 11.0]);
        assert_eq!(g[5], vec![1.0, 10.0]);
    }

    #[test]
    fn too_few_nodes_rejected() {
        assert!(sample_parameter_grid(&[(1.0, 2.0)], &[3]).is_err());
        assert!(sample_parameter_grid(&[(1.0, 2.0)], &[2]).is_err());
    }
}
