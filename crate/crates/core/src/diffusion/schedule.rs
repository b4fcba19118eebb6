use crate::{Error, Result};

pub const DEFAULT_RHO: f64 = 7.0;

/// Noise levels `sigma_1 < ... < sigma_N` of a variance-exploding process
/// (`alpha_i = 1`). Indices are 1-based; index 0 denotes the clean end,
/// `sigma_0 = 0`. The abstract time of step `i` is `sigma_i` itself.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    sigmas: Vec<f64>,
    rho: f64,
}

impl NoiseSchedule {
    pub fn steps(&self) -> usize {
        self.sigmas.len()
    }

    /// `sigma_i` for `1 <= i <= N`; `sigma_0 = 0`.
    pub fn sigma(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.sigmas[i - 1]
        }
    }

    pub fn alpha(&self, _i: usize) -> f64 {
        1.0
    }

    pub fn time(&self, i: usize) -> f64 {
        self.sigma(i)
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigmas[0]
    }

    pub fn sigma_max(&self) -> f64 {
        *self.sigmas.last().expect("non-empty schedule")
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Ascending `sigma_1..=sigma_N`.
    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }
}

/// Karras-spaced schedule:
/// `sigma_i = (smin^(1/rho) + (i-1)/(N-1) * (smax^(1/rho) - smin^(1/rho)))^rho`,
/// with both endpoints set exactly.
pub fn build_schedule(steps: usize, sigma_min: f64, sigma_max: f64, rho: f64) -> Result<NoiseSchedule> {
    if steps < 2 {
        return Err(Error::Schedule(format!("need at least 2 steps, got {steps}")));
    }
    if !(sigma_min > 0.0 && sigma_min < sigma_max && sigma_max.is_finite()) {
        return Err(Error::Schedule(format!(
            "require 0 < sigma_min < sigma_max, got {sigma_min}, {sigma_max}"
        )));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Schedule(format!("rho must be positive, got {rho}")));
    }
    let lo = sigma_min.powf(1.0 / rho);
    let hi = sigma_max.powf(1.0 / rho);
    let mut sigmas: Vec<f64> = (0..steps)
        .map(|k| (lo + k as f64 / (steps - 1) as f64 * (hi - lo)).powf(rho))
        .collect();
    sigmas[0] = sigma_min;
    sigmas[steps - 1] = sigma_max;
    if sigmas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Schedule("noise levels are not strictly increasing".into()));
    }
    Ok(NoiseSchedule { sigmas, rho })
}
