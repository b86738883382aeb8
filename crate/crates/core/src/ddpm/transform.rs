//! Per-dimension target standardization: optional log, then z-score.
//! Statistics always come from the training split.

use super::net::TARGET_DIM;
use serde::{Deserialize, Serialize};

/// Invertible map between original target units and standardized space.
/// The log leg is enabled per dimension only when every training value is
/// strictly positive, so the inverse is exact on the fitted domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetTransform {
    pub log_applied: [bool; TARGET_DIM],
    pub mean: [f64; TARGET_DIM],
    pub std: [f64; TARGET_DIM],
}

impl TargetTransform {
    pub fn fit(targets: &[[f64; TARGET_DIM]]) -> Self {
        assert!(!targets.is_empty(), "cannot fit a transform on no targets");
        let mut log_applied = [false; TARGET_DIM];
        for d in 0..TARGET_DIM {
            log_applied[d] = targets.iter().all(|t| t[d] > 0.0);
        }
        let n = targets.len() as f64;
        let mut mean = [0.0; TARGET_DIM];
        for t in targets {
            for d in 0..TARGET_DIM {
                mean[d] += pre(t[d], log_applied[d]);
            }
        }
        for m in mean.iter_mut() {
            *m /= n;
        }
        let mut std = [0.0; TARGET_DIM];
        for t in targets {
            for d in 0..TARGET_DIM {
                std[d] += (pre(t[d], log_applied[d]) - mean[d]).powi(2);
            }
        }
        for s in std.iter_mut() {
            *s = (*s / n).sqrt();
            // constant dimensions standardize to zero rather than dividing by zero
            if *s < 1e-12 {
                *s = 1.0;
            }
        }
        Self {
            log_applied,
            mean,
            std,
        }
    }

    pub fn standardize(&self, x: [f64; TARGET_DIM]) -> [f64; TARGET_DIM] {
        let mut z = [0.0; TARGET_DIM];
        for d in 0..TARGET_DIM {
            z[d] = (pre(x[d], self.log_applied[d]) - self.mean[d]) / self.std[d];
        }
        z
    }

    pub fn restore(&self, z: [f64; TARGET_DIM]) -> [f64; TARGET_DIM] {
        let mut x = [0.0; TARGET_DIM];
        for d in 0..TARGET_DIM {
            let y = z[d] * self.std[d] + self.mean[d];
            x[d] = if self.log_applied[d] { y.exp() } else { y };
        }
        x
    }
}

fn pre(x: f64, log: bool) -> f64 {
    if log {
        x.ln()
    } else {
        x
    }
}
