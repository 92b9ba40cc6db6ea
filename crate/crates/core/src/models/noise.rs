use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Additive Gaussian noise `βΞ` with `β = level·(max b − min b)`.
///
/// `Ξ` is drawn from `ChaCha20Rng::seed_from_u64(seed)`: consecutive pairs of uniforms
/// `(u1, u2)` in `[0, 1)` give `√(−2 ln(1 − u1))·(cos 2πu2, sin 2πu2)`, used in that order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub level: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct NoisyData {
    pub y_delta: DVector<f64>,
    pub eta: DVector<f64>,
    pub delta: f64,
    pub beta: f64,
}

impl NoiseSpec {
    pub fn new(level: f64, seed: u64) -> Self {
        Self { level, seed }
    }

    pub fn beta(&self, b: &DVector<f64>) -> Result<f64> {
        if !(self.level >= 0.0 && self.level.is_finite()) {
            return Err(Error::Input(format!("noise level must be nonnegative, got {}", self.level)));
        }
        let range = b.max() - b.min();
        if !(range > 0.0) {
            return Err(Error::Input("noise scale undefined for constant data".into()));
        }
        Ok(self.level * range)
    }
}

/// `n` standard normal samples from the documented generator.
pub fn standard_normal(seed: u64, n: usize) -> DVector<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n + 1);
    while out.len() < n {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let rad = (-2.0 * (1.0 - u1).ln()).sqrt();
        let ang = 2.0 * std::f64::consts::PI * u2;
        out.push(rad * ang.cos());
        out.push(rad * ang.sin());
    }
    out.truncate(n);
    DVector::from_vec(out)
}

pub fn add_noise(b: &DVector<f64>, spec: &NoiseSpec) -> Result<NoisyData> {
    let beta = spec.beta(b)?;
    let eta = standard_normal(spec.seed, b.len()) * beta;
    Ok(NoisyData {
        y_delta: b + &eta,
        delta: eta.norm(),
        eta,
        beta,
    })
}
