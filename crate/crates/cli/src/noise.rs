use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use twsar_core::forward::{norm, PhaseHistory};
use twsar_core::Complex64;

/// Adds complex white Gaussian noise rescaled so that its norm is exactly
/// `fraction · ‖d‖`. The same seed always gives the same realisation.
pub fn add_noise(d: &PhaseHistory, fraction: f64, seed: u64) -> PhaseHistory {
    assert!(fraction >= 0.0, "noise fraction must be non-negative");
    let target = fraction * d.norm();
    if target == 0.0 {
        return d.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<Complex64> = (0..d.len())
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    let s = target / norm(&noise);
    PhaseHistory {
        samples: d.samples.iter().zip(&noise).map(|(a, n)| a + n * s).collect(),
    }
}
