//! SAR data models.
//!
//! Sample `i` of the phase history (order of [`AcquisitionGeometry::sample`])
//! is modelled as
//!
//! ```text
//! d_i = a(ω_i) e^{-iω_i R_{0,i}/c} Σ_j G'(x_j, tx_i) G'(rx_i, x_j) v_j  (+ F₀)
//! ```
//!
//! where `G' = G₀ + U_sc` includes the field scattered by the wall and the
//! receive factor comes from a source at the receiver (reciprocity). With
//! `U_sc = 0` this is the standard free-space Born model.

use faer::col::ColRef;
use faer::Mat;

use crate::geometry::{vec3, AcquisitionGeometry, ImageGrid, Vec3};
use crate::rom::{PodModel, RowLayout};
use crate::{Complex64, Error, Result, C0};

/// Free-space Helmholtz Green's function `e^{ik|x-y|} / (4π|x-y|)`, `k = ω/c`.
pub fn greens_free(x: Vec3, y: Vec3, omega: f64) -> Result<Complex64> {
    let r = vec3::dist(x, y);
    if !(r > 0.0) {
        return Err(Error::invalid("Green's function evaluated at coincident points"));
    }
    Ok(greens_at(r, omega))
}

fn greens_at(r: f64, omega: f64) -> Complex64 {
    let (s, c) = (omega / C0 * r).sin_cos();
    Complex64::new(c, s) / (4.0 * std::f64::consts::PI * r)
}

/// Transmit spectrum `P(ω)`; flat over the band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectrum {
    pub power: f64,
}

impl Default for Spectrum {
    fn default() -> Self {
        Self { power: 1.0 }
    }
}

impl Spectrum {
    /// `a(ω) = ω² P(ω)`.
    pub fn weight(&self, omega: f64) -> Complex64 {
        Complex64::new(omega * omega * self.power, 0.0)
    }
}

/// `a(ω)` for the flat unit spectrum.
pub fn spectrum_weight(omega: f64) -> Complex64 {
    Spectrum::default().weight(omega)
}

/// Phase-history samples in acquisition order.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseHistory {
    pub samples: Vec<Complex64>,
}

impl PhaseHistory {
    pub fn zeros(n: usize) -> Self {
        Self {
            samples: vec![Complex64::default(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.samples)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectivityImage {
    pub values: Vec<Complex64>,
    pub grid: ImageGrid,
}

impl ReflectivityImage {
    pub fn new(values: Vec<Complex64>, grid: ImageGrid) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::invalid("reflectivity image has non-finite entries"));
        }
        Ok(Self { values, grid })
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `⟨a, b⟩ = aᴴ b`.
pub fn inner_product(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Dense linear model `d = A v`.
#[derive(Debug, Clone)]
pub struct ForwardOperator {
    pub matrix: Mat<Complex64>,
    /// Parameters the operator was built for (`None` for free space).
    pub m: Option<Vec<f64>>,
    pub reference_ranges: Vec<f64>,
    pub weights: Vec<Complex64>,
}

impl ForwardOperator {
    pub fn num_samples(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_pixels(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.num_pixels(), v.len())?;
        let y = &self.matrix * ColRef::from_slice(v);
        Ok(y.iter().copied().collect())
    }

    pub fn adjoint(&self, d: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.num_samples(), d.len())?;
        let y = self.matrix.adjoint() * ColRef::from_slice(d);
        Ok(y.iter().copied().collect())
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// `a(ω_i) e^{-iω_i R_{0,i}/c}` for every sample.
pub fn sample_prefactors(acq: &AcquisitionGeometry, spectrum: Spectrum) -> (Vec<f64>, Vec<Complex64>) {
    let ranges: Vec<f64> = (0..acq.num_samples()).map(|i| acq.reference_range(i)).collect();
    let pre = ranges
        .iter()
        .enumerate()
        .map(|(i, &r0)| {
            let omega = acq.omega(acq.sample(i).freq);
            let (s, c) = (-omega * r0 / C0).sin_cos();
            spectrum.weight(omega) * Complex64::new(c, s)
        })
        .collect();
    (ranges, pre)
}

/// Free-space Green's function from every antenna to every pixel, laid out
/// like [`RowLayout::Image`].
fn free_table(acq: &AcquisitionGeometry, grid: &ImageGrid) -> Result<Vec<Complex64>> {
    let pixels = grid.points();
    let mut out = Vec::with_capacity(acq.num_frequencies() * acq.antennas().len() * pixels.len());
    for f in 0..acq.num_frequencies() {
        let omega = acq.omega(f);
        for a in acq.antennas() {
            for &x in &pixels {
                out.push(greens_free(x, a.position, omega)?);
            }
        }
    }
    Ok(out)
}

/// Row `i`, column `j` is `pre_i · f(t, r)` where `t`, `r` index the
/// transmit- and receive-side entries of an image-layout table.
fn build_matrix(acq: &AcquisitionGeometry, np: usize, pre: &[Complex64], f: impl Fn(usize, usize) -> Complex64) -> Mat<Complex64> {
    let na = acq.antennas().len();
    Mat::from_fn(acq.num_samples(), np, |i, j| {
        let s = acq.sample(i);
        let bt = (s.freq * na + s.tx_antenna) * np;
        let br = (s.freq * na + s.rx_antenna) * np;
        pre[i] * f(bt + j, br + j)
    })
}

/// Standard SAR model: `G' = G₀`.
pub fn freespace_operator(acq: &AcquisitionGeometry, grid: &ImageGrid, spectrum: Spectrum) -> Result<ForwardOperator> {
    let g = free_table(acq, grid)?;
    let (reference_ranges, weights) = sample_prefactors(acq, spectrum);
    let matrix = build_matrix(acq, grid.len(), &weights, |t, r| g[t] * g[r]);
    Ok(ForwardOperator {
        matrix,
        m: None,
        reference_ranges,
        weights,
    })
}

/// Through-wall data model built from reduced-order wall fields.
#[derive(Debug, Clone)]
pub struct ThroughWallModel {
    pub acq: AcquisitionGeometry,
    pub grid: ImageGrid,
    pub spectrum: Spectrum,
    /// Wall fields at the image pixels.
    pub pod_f1: PodModel,
    /// Wall fields at the receivers (direct wall return).
    pub pod_f0: Option<PodModel>,
    free: Vec<Complex64>,
    weights: Vec<Complex64>,
    ranges: Vec<f64>,
}

impl ThroughWallModel {
    pub fn new(
        acq: AcquisitionGeometry,
        grid: ImageGrid,
        spectrum: Spectrum,
        pod_f1: PodModel,
        pod_f0: Option<PodModel>,
    ) -> Result<Self> {
        let expected = RowLayout::image(&acq, &grid);
        if pod_f1.layout != expected {
            return Err(Error::invalid(format!(
                "image-point model layout {:?} does not match acquisition/grid {:?}",
                pod_f1.layout, expected
            )));
        }
        if let Some(p) = &pod_f0 {
            if p.layout != RowLayout::receiver(&acq) {
                return Err(Error::invalid("receiver model layout does not match the acquisition"));
            }
            if p.space.axes != pod_f1.space.axes {
                return Err(Error::invalid("receiver and image models use different parameter spaces"));
            }
        }
        let free = free_table(&acq, &grid)?;
        let (ranges, weights) = sample_prefactors(&acq, spectrum);
        Ok(Self {
            acq,
            grid,
            spectrum,
            pod_f1,
            pod_f0,
            free,
            weights,
            ranges,
        })
    }

    pub fn num_params(&self) -> usize {
        self.pod_f1.space.dim()
    }

    pub fn freespace(&self) -> ForwardOperator {
        let g = &self.free;
        ForwardOperator {
            matrix: build_matrix(&self.acq, self.grid.len(), &self.weights, |t, r| g[t] * g[r]),
            m: None,
            reference_ranges: self.ranges.clone(),
            weights: self.weights.clone(),
        }
    }

    fn total_green(&self, u: &[Complex64]) -> Vec<Complex64> {
        self.free.iter().zip(u).map(|(g, u)| g + u).collect()
    }

    /// `A(m)`.
    pub fn operator(&self, m: &[f64]) -> ForwardOperator {
        let g = self.total_green(&self.pod_f1.evaluate(m).value);
        ForwardOperator {
            matrix: build_matrix(&self.acq, self.grid.len(), &self.weights, |t, r| g[t] * g[r]),
            m: Some(m.to_vec()),
            reference_ranges: self.ranges.clone(),
            weights: self.weights.clone(),
        }
    }

    /// `A(m)` together with `∂A/∂m_j` for every parameter.
    pub fn operator_with_gradient(&self, m: &[f64]) -> (ForwardOperator, Vec<Mat<Complex64>>) {
        let (u, du) = self.pod_f1.evaluate_with_gradient(m).value;
        let g = self.total_green(&u);
        let np = self.grid.len();
        let op = ForwardOperator {
            matrix: build_matrix(&self.acq, np, &self.weights, |t, r| g[t] * g[r]),
            m: Some(m.to_vec()),
            reference_ranges: self.ranges.clone(),
            weights: self.weights.clone(),
        };
        let d = du
            .iter()
            .map(|dg| build_matrix(&self.acq, np, &self.weights, |t, r| dg[t] * g[r] + g[t] * dg[r]))
            .collect();
        (op, d)
    }

    /// Direct wall return `F₀(m)` (zero when no receiver model is loaded).
    pub fn direct(&self, m: &[f64]) -> PhaseHistory {
        match &self.pod_f0 {
            None => PhaseHistory::zeros(self.acq.num_samples()),
            Some(p) => PhaseHistory {
                samples: p.evaluate(m).value.iter().zip(&self.weights).map(|(u, w)| u * w).collect(),
            },
        }
    }

    /// `∂F₀/∂m_j`.
    pub fn direct_gradient(&self, m: &[f64]) -> Vec<Vec<Complex64>> {
        match &self.pod_f0 {
            None => vec![vec![Complex64::default(); self.acq.num_samples()]; self.num_params()],
            Some(p) => p
                .gradient(m)
                .value
                .iter()
                .map(|du| du.iter().zip(&self.weights).map(|(u, w)| u * w).collect())
                .collect(),
        }
    }
}

/// `A(m)` for the through-wall model.
pub fn assemble_a(model: &ThroughWallModel, m: &[f64]) -> ForwardOperator {
    model.operator(m)
}

/// `F₀(m)`.
pub fn direct_wall_response(model: &ThroughWallModel, m: &[f64]) -> PhaseHistory {
    model.direct(m)
}

/// `A v`, plus `F₀` when given.
pub fn predict(op: &ForwardOperator, v: &[Complex64], direct: Option<&PhaseHistory>) -> Result<PhaseHistory> {
    let mut d = op.apply(v)?;
    if let Some(f0) = direct {
        check_len(d.len(), f0.len())?;
        d.iter_mut().zip(&f0.samples).for_each(|(a, b)| *a += b);
    }
    Ok(PhaseHistory { samples: d })
}

/// Back-projection `Aᴴ d`.
pub fn apply_adjoint(op: &ForwardOperator, d: &PhaseHistory, grid: &ImageGrid) -> Result<ReflectivityImage> {
    check_len(grid.len(), op.num_pixels())?;
    ReflectivityImage::new(op.adjoint(&d.samples)?, grid.clone())
}
