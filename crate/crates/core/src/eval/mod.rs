//! Accuracy metrics, salinity-stratified scatter export, and periodicity
//! analysis.

mod periodogram;

pub use periodogram::{periodogram, PeriodogramConfig, PeriodogramResult};

use crate::header::FileHeader;
use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("truth vector is constant; coefficient of determination is undefined")]
    ConstantTruth,
    #[error("write failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Coefficient of determination `1 - SS_res / SS_tot`.
pub fn r2(y_true: &[f64], y_pred: &[f64]) -> Result<f64, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.len() < 2 {
        return Err(EvalError::TooFewPoints {
            need: 2,
            got: y_true.len(),
        });
    }
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let ss_tot: f64 = y_true.iter().map(|y| (y - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(EvalError::ConstantTruth);
    }
    let ss_res: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(t, p)| (t - p).powi(2))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Root-mean-square error.
pub fn rmse(y_true: &[f64], y_pred: &[f64]) -> Result<f64, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(EvalError::TooFewPoints { need: 1, got: 0 });
    }
    let mse: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(t, p)| (t - p).powi(2))
        .sum::<f64>()
        / y_true.len() as f64;
    Ok(mse.sqrt())
}

/// Default salinity strata (PSU bin edges) for the per-bin breakdown.
pub const DEFAULT_SALINITY_BIN_EDGES: [f64; 5] = [0.0, 5.0, 15.0, 25.0, 42.0];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SalinityBinMetrics {
    pub salinity_lo_psu: f64,
    pub salinity_hi_psu: f64,
    pub n: usize,
    /// Absent when the bin has too few points or constant truth.
    pub r2: Option<f64>,
    pub rmse: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub r2: f64,
    pub rmse: f64,
    pub n: usize,
    pub bins: Vec<SalinityBinMetrics>,
}

/// Overall metrics plus a per-salinity-stratum breakdown.
pub fn metric_report(
    y_true: &[f64],
    y_pred: &[f64],
    salinity: &[f64],
    bin_edges: &[f64],
) -> Result<MetricReport, EvalError> {
    if y_true.len() != salinity.len() {
        return Err(EvalError::LengthMismatch {
            left: y_true.len(),
            right: salinity.len(),
        });
    }
    let overall_r2 = r2(y_true, y_pred)?;
    let overall_rmse = rmse(y_true, y_pred)?;
    let mut bins = Vec::new();
    for edge in bin_edges.windows(2) {
        let (lo, hi) = (edge[0], edge[1]);
        let last = hi >= bin_edges[bin_edges.len() - 1];
        let idx: Vec<usize> = salinity
            .iter()
            .enumerate()
            .filter(|(_, &s)| s >= lo && (s < hi || (last && s <= hi)))
            .map(|(i, _)| i)
            .collect();
        let t: Vec<f64> = idx.iter().map(|&i| y_true[i]).collect();
        let p: Vec<f64> = idx.iter().map(|&i| y_pred[i]).collect();
        bins.push(SalinityBinMetrics {
            salinity_lo_psu: lo,
            salinity_hi_psu: hi,
            n: idx.len(),
            r2: r2(&t, &p).ok(),
            rmse: rmse(&t, &p).ok(),
        });
    }
    Ok(MetricReport {
        r2: overall_r2,
        rmse: overall_rmse,
        n: y_true.len(),
        bins,
    })
}

/// Write the (truth, prediction, salinity) table for external plotting.
/// Values use shortest round-trip formatting, so re-parsing is exact.
pub fn scatter_export<W: Write>(
    mut writer: W,
    header: &FileHeader,
    y_true: &[f64],
    y_pred: &[f64],
    salinity: &[f64],
) -> Result<(), EvalError> {
    if y_true.len() != y_pred.len() || y_true.len() != salinity.len() {
        return Err(EvalError::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len().min(salinity.len()),
        });
    }
    writeln!(writer, "{}", header.csv_comment())?;
    writeln!(writer, "nitrate_true,nitrate_pred,salinity_psu")?;
    for i in 0..y_true.len() {
        writeln!(writer, "{},{},{}", y_true[i], y_pred[i], salinity[i])?;
    }
    Ok(())
}
