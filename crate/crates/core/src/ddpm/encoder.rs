//! Condition encoder: top-k principal-component scores of the standardized
//! reflectance spectrum, concatenated with z-scored salinity.

use super::DdpmError;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

pub const MAX_COMPONENTS: usize = 32;

/// Fitted projection. All statistics come from the training split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionEncoder {
    pub band_mean: Vec<f64>,
    pub band_std: Vec<f64>,
    /// Row-major k x n_bands principal directions, orthonormal, each with its
    /// largest-magnitude entry positive.
    pub components: Vec<Vec<f64>>,
    /// All eigenvalues of the standardized band covariance, descending.
    pub eigenvalues: Vec<f64>,
    pub salinity_mean: f64,
    pub salinity_std: f64,
    pub requested_components: usize,
    /// Effective k; smaller than requested when the data is rank deficient.
    pub components_kept: usize,
    pub rank_reduced: bool,
}

impl ConditionEncoder {
    pub fn condition_dim(&self) -> usize {
        self.components_kept + 1
    }

    pub fn n_bands(&self) -> usize {
        self.band_mean.len()
    }

    /// Fraction of standardized variance carried by each retained component.
    pub fn explained_variance(&self) -> Vec<f64> {
        let total: f64 = self.eigenvalues.iter().sum();
        if total <= 0.0 {
            return vec![0.0; self.components_kept];
        }
        self.eigenvalues[..self.components_kept]
            .iter()
            .map(|&v| v / total)
            .collect()
    }

    fn standardize_bands(&self, rrs: &[f64]) -> Vec<f64> {
        rrs.iter()
            .zip(&self.band_mean)
            .zip(&self.band_std)
            .map(|((&x, &m), &s)| (x - m) / s)
            .collect()
    }

    /// Project a spectrum into score space (length `components_kept`).
    pub fn project(&self, rrs: &[f64]) -> Result<Vec<f64>, DdpmError> {
        if rrs.len() != self.n_bands() {
            return Err(DdpmError::DimensionMismatch {
                expected: self.n_bands(),
                got: rrs.len(),
            });
        }
        let z = self.standardize_bands(rrs);
        Ok(self
            .components
            .iter()
            .map(|c| c.iter().zip(&z).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Mean squared per-sample reconstruction error of `rrs` from its scores,
    /// in standardized band space.
    pub fn reconstruction_error(&self, rrs: &[f64]) -> Result<f64, DdpmError> {
        let z = self.standardize_bands(rrs);
        let scores = self.project(rrs)?;
        let mut recon = vec![0.0; z.len()];
        for (component, &score) in self.components.iter().zip(&scores) {
            for (r, &c) in recon.iter_mut().zip(component) {
                *r += score * c;
            }
        }
        Ok(z.iter().zip(&recon).map(|(a, b)| (a - b).powi(2)).sum())
    }
}

/// Fit band statistics and the top-k eigenvectors of the standardized band
/// covariance (population convention). Rank-deficient data reduces k and sets
/// `rank_reduced`.
pub fn fit_encoder(
    spectra: &[Vec<f64>],
    salinity: &[f64],
    k: usize,
) -> Result<ConditionEncoder, DdpmError> {
    if k == 0 || k > MAX_COMPONENTS {
        return Err(DdpmError::InvalidConfig(format!(
            "component count {k} outside 1..={MAX_COMPONENTS}"
        )));
    }
    if spectra.len() < k + 1 {
        return Err(DdpmError::TooFewSamples {
            need: k + 1,
            got: spectra.len(),
        });
    }
    if spectra.len() != salinity.len() {
        return Err(DdpmError::DimensionMismatch {
            expected: spectra.len(),
            got: salinity.len(),
        });
    }
    let n_bands = spectra[0].len();
    if spectra.iter().any(|s| s.len() != n_bands) {
        return Err(DdpmError::DimensionMismatch {
            expected: n_bands,
            got: spectra.iter().find(|s| s.len() != n_bands).unwrap().len(),
        });
    }
    let n = spectra.len() as f64;

    let mut band_mean = vec![0.0; n_bands];
    for s in spectra {
        for (m, &x) in band_mean.iter_mut().zip(s) {
            *m += x;
        }
    }
    for m in band_mean.iter_mut() {
        *m /= n;
    }
    let mut band_std = vec![0.0; n_bands];
    for s in spectra {
        for ((v, &x), &m) in band_std.iter_mut().zip(s).zip(&band_mean) {
            *v += (x - m).powi(2);
        }
    }
    for v in band_std.iter_mut() {
        *v = (*v / n).sqrt();
        if *v < 1e-15 {
            *v = 1.0;
        }
    }

    // population covariance of the standardized bands
    let mut covariance = DMatrix::<f64>::zeros(n_bands, n_bands);
    let mut z = vec![0.0; n_bands];
    for s in spectra {
        for (i, ((&x, &m), &sd)) in s.iter().zip(&band_mean).zip(&band_std).enumerate() {
            z[i] = (x - m) / sd;
        }
        for i in 0..n_bands {
            for j in i..n_bands {
                covariance[(i, j)] += z[i] * z[j];
            }
        }
    }
    for i in 0..n_bands {
        for j in i..n_bands {
            let v = covariance[(i, j)] / n;
            covariance[(i, j)] = v;
            covariance[(j, i)] = v;
        }
    }

    let eigen = SymmetricEigen::new(covariance);
    let mut order: Vec<usize> = (0..n_bands).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order
        .iter()
        .map(|&i| eigen.eigenvalues[i].max(0.0))
        .collect();

    let max_eig = eigenvalues.first().copied().unwrap_or(0.0);
    let nonzero = eigenvalues
        .iter()
        .filter(|&&v| v > 1e-12 * max_eig.max(1e-300))
        .count();
    let kept = k.min(nonzero.max(1));

    let mut components = Vec::with_capacity(kept);
    for &idx in order.iter().take(kept) {
        let column = eigen.eigenvectors.column(idx);
        let mut v: Vec<f64> = column.iter().copied().collect();
        // deterministic sign: largest-magnitude entry positive, first on ties
        let mut lead = 0;
        for (i, value) in v.iter().enumerate() {
            if value.abs() > v[lead].abs() + 1e-15 {
                lead = i;
            }
        }
        if v[lead] < 0.0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
        components.push(v);
    }

    let salinity_mean = salinity.iter().sum::<f64>() / n;
    let mut salinity_std =
        (salinity.iter().map(|s| (s - salinity_mean).powi(2)).sum::<f64>() / n).sqrt();
    if salinity_std < 1e-12 {
        salinity_std = 1.0;
    }

    Ok(ConditionEncoder {
        band_mean,
        band_std,
        components,
        eigenvalues,
        salinity_mean,
        salinity_std,
        requested_components: k,
        components_kept: kept,
        rank_reduced: kept < k,
    })
}

/// Condition vector: k spectral scores followed by z-scored salinity.
pub fn encode_condition(
    encoder: &ConditionEncoder,
    rrs: &[f64],
    salinity_psu: f64,
) -> Result<Vec<f64>, DdpmError> {
    let mut values = encoder.project(rrs)?;
    values.push((salinity_psu - encoder.salinity_mean) / encoder.salinity_std);
    Ok(values)
}
