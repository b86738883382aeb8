//! Diffusion noise schedule: beta/alpha/alpha-bar sequences and the closed
//! form of the forward noising process.

use super::DdpmError;
use serde::{Deserialize, Serialize};

/// Variance schedule over `steps` diffusion steps. `beta[t-1]`, `alpha[t-1]`,
/// and `alpha_bar[t-1]` correspond to step `t` in 1..=steps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseSchedule {
    pub beta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub alpha_bar: Vec<f64>,
}

impl NoiseSchedule {
    /// Schedule from explicit betas; each must lie in (0, 1), which makes
    /// alpha-bar strictly decreasing by construction.
    pub fn from_betas(beta: Vec<f64>) -> Result<Self, DdpmError> {
        if beta.is_empty() {
            return Err(DdpmError::InvalidSchedule("no steps".into()));
        }
        if let Some(&bad) = beta.iter().find(|b| !(**b > 0.0 && **b < 1.0)) {
            return Err(DdpmError::InvalidSchedule(format!(
                "beta {bad} outside (0, 1)"
            )));
        }
        let alpha: Vec<f64> = beta.iter().map(|b| 1.0 - b).collect();
        let mut alpha_bar = Vec::with_capacity(alpha.len());
        let mut product = 1.0;
        for a in &alpha {
            product *= a;
            alpha_bar.push(product);
        }
        Ok(Self {
            beta,
            alpha,
            alpha_bar,
        })
    }

    /// Linear beta ramp from `beta_min` to `beta_max` over `steps`.
    pub fn linear(steps: usize, beta_min: f64, beta_max: f64) -> Result<Self, DdpmError> {
        if steps == 0 {
            return Err(DdpmError::InvalidSchedule("no steps".into()));
        }
        if !(beta_min <= beta_max) {
            return Err(DdpmError::InvalidSchedule(format!(
                "beta_min {beta_min} > beta_max {beta_max}"
            )));
        }
        let beta = (0..steps)
            .map(|i| {
                if steps == 1 {
                    beta_min
                } else {
                    beta_min + (beta_max - beta_min) * i as f64 / (steps - 1) as f64
                }
            })
            .collect();
        Self::from_betas(beta)
    }

    pub fn steps(&self) -> usize {
        self.beta.len()
    }

    /// Terminal bounds a production schedule must satisfy: nearly-noiseless
    /// first step, nearly pure noise at the end. Config validation enforces
    /// this; hand-built test schedules may ignore it.
    pub fn terminal_bounds_ok(&self) -> bool {
        self.alpha_bar[0] > 0.9 && *self.alpha_bar.last().unwrap() < 0.01
    }

    fn check_step(&self, t: usize) -> Result<(), DdpmError> {
        if t == 0 || t > self.steps() {
            return Err(DdpmError::StepOutOfRange {
                t,
                steps: self.steps(),
            });
        }
        Ok(())
    }

    pub fn beta_at(&self, t: usize) -> f64 {
        self.beta[t - 1]
    }

    pub fn alpha_at(&self, t: usize) -> f64 {
        self.alpha[t - 1]
    }

    pub fn alpha_bar_at(&self, t: usize) -> f64 {
        self.alpha_bar[t - 1]
    }

    /// alpha_bar at t-1, with the t=1 convention of 1.
    pub fn alpha_bar_prev(&self, t: usize) -> f64 {
        if t <= 1 {
            1.0
        } else {
            self.alpha_bar[t - 2]
        }
    }

    /// Reverse-process noise scale `sigma_t^2 = beta_t (1 - abar_{t-1}) / (1 - abar_t)`;
    /// zero at t = 1.
    pub fn sigma_at(&self, t: usize) -> f64 {
        if t <= 1 {
            return 0.0;
        }
        let abar_t = self.alpha_bar_at(t);
        let abar_prev = self.alpha_bar_prev(t);
        (self.beta_at(t) * (1.0 - abar_prev) / (1.0 - abar_t)).sqrt()
    }
}

/// Forward noising in closed form:
/// `x_t = sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps`.
/// The caller supplies `eps` so the map stays testable and invertible.
pub fn forward_noise(
    x0: &[f64],
    t: usize,
    eps: &[f64],
    schedule: &NoiseSchedule,
) -> Result<Vec<f64>, DdpmError> {
    schedule.check_step(t)?;
    if x0.len() != eps.len() {
        return Err(DdpmError::DimensionMismatch {
            expected: x0.len(),
            got: eps.len(),
        });
    }
    let abar = schedule.alpha_bar_at(t);
    let (signal, noise) = (abar.sqrt(), (1.0 - abar).sqrt());
    Ok(x0
        .iter()
        .zip(eps)
        .map(|(&x, &e)| signal * x + noise * e)
        .collect())
}

/// Analytic inverse of [`forward_noise`] given the same `eps`.
pub fn invert_forward_noise(
    x_t: &[f64],
    t: usize,
    eps: &[f64],
    schedule: &NoiseSchedule,
) -> Result<Vec<f64>, DdpmError> {
    schedule.check_step(t)?;
    let abar = schedule.alpha_bar_at(t);
    let (signal, noise) = (abar.sqrt(), (1.0 - abar).sqrt());
    Ok(x_t
        .iter()
        .zip(eps)
        .map(|(&x, &e)| (x - noise * e) / signal)
        .collect())
}
