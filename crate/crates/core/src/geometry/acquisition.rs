//! Multi-static collection geometry.

use serde::{Deserialize, Serialize};

use super::mesh::SurfaceMesh;
use super::vec3::{self, Vec3};
use crate::{Error, Result, C0};

/// Collection parameters (frequencies in Hz, angles in radians, lengths in m).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionConfig {
    pub center_frequency: f64,
    pub bandwidth: f64,
    pub num_frequencies: usize,
    pub azimuth_aperture: f64,
    pub tx_azimuth: f64,
    pub bistatic_angles: Vec<f64>,
    pub range: f64,
    pub num_slow_time: usize,
    #[serde(default)]
    pub antenna_height: f64,
    #[serde(default)]
    pub scene_center: [f64; 3],
}

impl AcquisitionConfig {
    /// Collection parameters of the reference multi-static experiment.
    pub fn reference(num_frequencies: usize, num_slow_time: usize) -> Self {
        use std::f64::consts::PI;
        Self {
            center_frequency: 349.9e6,
            bandwidth: 299.8e6,
            num_frequencies,
            azimuth_aperture: 0.86,
            tx_azimuth: -7.0 * PI / 12.0,
            bistatic_angles: vec![0.0, -PI / 6.0, -PI / 3.0],
            range: 20.0,
            num_slow_time,
            antenna_height: 0.0,
            scene_center: [0.0; 3],
        }
    }

    /// Smallest sample counts meeting Nyquist with 20 % oversampling for a
    /// scene of the given diameter: `(num_frequencies, num_slow_time)`.
    pub fn nyquist_counts(&self, scene_diameter: f64) -> (usize, usize) {
        let df_max = C0 / (2.0 * scene_diameter * 1.2);
        let nf = (self.bandwidth / df_max).ceil() as usize + 1;
        let lambda_min = C0 / (self.center_frequency + 0.5 * self.bandwidth);
        let dtheta_max = lambda_min / (2.0 * scene_diameter * 1.2);
        let ns = (self.azimuth_aperture / dtheta_max).ceil() as usize + 1;
        (nf.max(2), ns.max(2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    /// Rotation of the receive path about the vertical axis through the scene
    /// centre, relative to the transmit path.
    pub bistatic_angle: f64,
}

/// What an antenna position is used for in the collection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AntennaRole {
    Transmit { slow: usize },
    Receive { channel: usize, slow: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Antenna {
    pub position: Vec3,
    /// First role under which this position was registered.
    pub role: AntennaRole,
}

/// One phase-history sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub channel: usize,
    pub slow: usize,
    pub freq: usize,
    pub omega: f64,
    pub tx: Vec3,
    pub rx: Vec3,
    pub tx_antenna: usize,
    pub rx_antenna: usize,
}

/// Realised collection: antenna paths, frequency grid and reference point.
///
/// Phase-history samples are ordered channel-major, then slow time, then
/// frequency: `i = (channel · n_s + slow) · n_ω + freq`.
#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionGeometry {
    pub config: AcquisitionConfig,
    pub slow_time_angles: Vec<f64>,
    pub tx_positions: Vec<Vec3>,
    pub rx_positions: Vec<Vec<Vec3>>,
    pub frequencies: Vec<f64>,
    pub reference_point: Vec3,
    pub channels: Vec<Channel>,
    antennas: Vec<Antenna>,
    rx_antenna: Vec<Vec<usize>>,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (a + b)];
    }
    (0..n)
        .map(|i| {
            if i == n - 1 {
                b
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

pub fn make_acquisition(config: &AcquisitionConfig) -> Result<AcquisitionGeometry> {
    if config.bistatic_angles.is_empty() {
        return Err(Error::invalid("acquisition needs at least one channel"));
    }
    if config.num_frequencies == 0 || config.num_slow_time == 0 {
        return Err(Error::invalid("acquisition needs at least one frequency and slow-time sample"));
    }
    if !(config.center_frequency > 0.0 && config.bandwidth >= 0.0 && config.range > 0.0) {
        return Err(Error::invalid("frequency, bandwidth and range must be positive"));
    }
    let half = 0.5 * config.azimuth_aperture;
    let angles = linspace(config.tx_azimuth - half, config.tx_azimuth + half, config.num_slow_time);
    let c = config.scene_center;
    let on_arc = |theta: f64| -> Vec3 {
        [
            c[0] + config.range * theta.cos(),
            c[1] + config.range * theta.sin(),
            c[2] + config.antenna_height,
        ]
    };
    let tx_positions: Vec<Vec3> = angles.iter().map(|&t| on_arc(t)).collect();
    let rotate = |p: Vec3, beta: f64| -> Vec3 {
        if beta == 0.0 {
            return p;
        }
        let (s, co) = beta.sin_cos();
        let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
        [c[0] + co * dx - s * dy, c[1] + s * dx + co * dy, p[2]]
    };
    let rx_positions: Vec<Vec<Vec3>> = config
        .bistatic_angles
        .iter()
        .map(|&b| tx_positions.iter().map(|&p| rotate(p, b)).collect())
        .collect();
    let frequencies = linspace(
        config.center_frequency - 0.5 * config.bandwidth,
        config.center_frequency + 0.5 * config.bandwidth,
        config.num_frequencies,
    );

    let mut antennas: Vec<Antenna> = tx_positions
        .iter()
        .enumerate()
        .map(|(s, &p)| Antenna {
            position: p,
            role: AntennaRole::Transmit { slow: s },
        })
        .collect();
    let mut rx_antenna = Vec::with_capacity(rx_positions.len());
    for (ch, path) in rx_positions.iter().enumerate() {
        let mut ids = Vec::with_capacity(path.len());
        for (s, &p) in path.iter().enumerate() {
            let id = match antennas.iter().position(|a| a.position == p) {
                Some(id) => id,
                None => {
                    antennas.push(Antenna {
                        position: p,
                        role: AntennaRole::Receive { channel: ch, slow: s },
                    });
                    antennas.len() - 1
                }
            };
            ids.push(id);
        }
        rx_antenna.push(ids);
    }

    Ok(AcquisitionGeometry {
        config: config.clone(),
        slow_time_angles: angles,
        tx_positions,
        rx_positions,
        frequencies,
        reference_point: c,
        channels: config
            .bistatic_angles
            .iter()
            .map(|&b| Channel { bistatic_angle: b })
            .collect(),
        antennas,
        rx_antenna,
    })
}

impl AcquisitionGeometry {
    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn num_slow_time(&self) -> usize {
        self.tx_positions.len()
    }

    pub fn num_frequencies(&self) -> usize {
        self.frequencies.len()
    }

    pub fn num_samples(&self) -> usize {
        self.num_channels() * self.num_slow_time() * self.num_frequencies()
    }

    pub fn omega(&self, f: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.frequencies[f]
    }

    pub fn sample_index(&self, channel: usize, slow: usize, freq: usize) -> usize {
        (channel * self.num_slow_time() + slow) * self.num_frequencies() + freq
    }

    pub fn sample(&self, i: usize) -> Sample {
        let nf = self.num_frequencies();
        let ns = self.num_slow_time();
        let freq = i % nf;
        let slow = (i / nf) % ns;
        let channel = i / (nf * ns);
        Sample {
            channel,
            slow,
            freq,
            omega: self.omega(freq),
            tx: self.tx_positions[slow],
            rx: self.rx_positions[channel][slow],
            tx_antenna: slow,
            rx_antenna: self.rx_antenna[channel][slow],
        }
    }

    /// Reference range `R_0 = |tx - x_ref| + |rx - x_ref|` of sample `i`.
    pub fn reference_range(&self, i: usize) -> f64 {
        let s = self.sample(i);
        vec3::dist(s.tx, self.reference_point) + vec3::dist(s.rx, self.reference_point)
    }

    /// Distinct antenna positions; transmit positions come first, indexed by
    /// slow time.
    pub fn antennas(&self) -> &[Antenna] {
        &self.antennas
    }

    pub fn rx_antenna(&self, channel: usize, slow: usize) -> usize {
        self.rx_antenna[channel][slow]
    }

    /// Unit vector from the scene centre towards the middle of the transmit
    /// aperture, projected into the horizontal plane.
    pub fn range_direction(&self) -> Vec3 {
        let t = self.config.tx_azimuth;
        [t.cos(), t.sin(), 0.0]
    }

    pub fn check_outside(&self, mesh: &SurfaceMesh) -> Result<()> {
        for (i, a) in self.antennas.iter().enumerate() {
            if mesh.contains(a.position) {
                return Err(Error::invalid(format!("antenna {i} lies inside an obstacle")));
            }
        }
        Ok(())
    }

    /// Frequencies all inside `[f_c - B/2, f_c + B/2]`?
    pub fn frequencies_in_band(&self) -> bool {
        let lo = self.config.center_frequency - 0.5 * self.config.bandwidth;
        let hi = self.config.center_frequency + 0.5 * self.config.bandwidth;
        self.frequencies.iter().all(|&f| f >= lo && f <= hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_geometry() {
        let acq = make_acquisition(&AcquisitionConfig::reference(8, 5)).unwrap();
        assert_eq!(acq.num_channels(), 3);
        assert_eq!(acq.num_samples(), 3 * 5 * 8);
        assert_eq!(acq.rx_positions[0], acq.tx_positions);
        assert_eq!(acq.frequencies[0], 349.9e6 - 0.5 * 299.8e6);
        assert_eq!(*acq.frequencies.last().unwrap(), 349.9e6 + 0.5 * 299.8e6);
        assert!(acq.frequencies_in_band());
        // mono-static channel shares the transmit antennas
        assert_eq!(acq.antennas().len(), 5 * 3);
        for s in 0..5 {
            assert_eq!(acq.rx_antenna(0, s), s);
            let r = vec3::dist(acq.rx_positions[2][s], [0.0; 3]);
            assert!((r - 20.0).abs() < 1e-12);
        }
        let i = acq.sample_index(2, 3, 4);
        let smp = acq.sample(i);
        assert_eq!((smp.channel, smp.slow, smp.freq), (2, 3, 4));
    }

    #[test]
    fn bistatic_rotation_is_about_scene_centre() {
        let mut cfg = AcquisitionConfig::reference(2, 3);
        cfg.bistatic_angles = vec![std::f64::consts::FRAC_PI_2];
        let acq = make_acquisition(&cfg).unwrap();
        for s in 0..3 {
            let (t, r) = (acq.tx_positions[s], acq.rx_positions[0][s]);
            assert!(vec3::dot(t, r).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_degenerate_configs() {
        let mut cfg = AcquisitionConfig::reference(2, 3);
        cfg.bistatic_angles.clear();
        assert!(make_acquisition(&cfg).is_err());
        let cfg = AcquisitionConfig::reference(0, 3);
        assert!(make_acquisition(&cfg).is_err());
    }
}
