//! Nitrate sensor drift correction against laboratory reference samples.

use super::{IngestError, LabSample, NitrateReading};
use serde::{Deserialize, Serialize};

/// Affine correction fitted on (sensor, lab) pairs, with fit diagnostics.
/// The model is deliberately gain+offset only: a dozen lab points cannot
/// support a time-varying drift, and the residual tells users how well it fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub gain: f64,
    pub offset_mg_l: f64,
    pub residual_rmse_mg_l: f64,
    pub n_pairs: usize,
    pub lab_match_window_minutes: i64,
}

/// Fit `lab ~= gain * sensor + offset` by least squares on lab samples paired
/// with the nearest sensor reading, then apply the correction to every
/// reading. Requires at least two lab samples, each within
/// `lab_window_minutes` of a reading.
pub fn drift_calibrate(
    readings: &[NitrateReading],
    labs: &[LabSample],
    lab_window_minutes: i64,
) -> Result<(Vec<NitrateReading>, CalibrationReport), IngestError> {
    if labs.len() < 2 {
        return Err(IngestError::InsufficientLabSamples { got: labs.len() });
    }
    let window_seconds = lab_window_minutes * 60;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(labs.len());
    for lab in labs {
        let nearest = readings
            .iter()
            .map(|r| ((r.timestamp - lab.timestamp).num_seconds().abs(), r))
            .min_by_key(|(d, _)| *d);
        match nearest {
            Some((d, r)) if d <= window_seconds => pairs.push((r.concentration_mg_l, lab.nitrate_mg_l)),
            _ => {
                return Err(IngestError::UnmatchableLabSample {
                    timestamp: crate::header::format_timestamp(lab.timestamp),
                    window_minutes: lab_window_minutes,
                })
            }
        }
    }

    let n = pairs.len() as f64;
    let mean_sensor = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_lab = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let var_sensor = pairs.iter().map(|p| (p.0 - mean_sensor).powi(2)).sum::<f64>() / n;
    let cov = pairs
        .iter()
        .map(|p| (p.0 - mean_sensor) * (p.1 - mean_lab))
        .sum::<f64>()
        / n;

    // All-identical sensor values leave the gain unconstrained; fall back to
    // a pure offset correction.
    let gain = if var_sensor > 1e-30 { cov / var_sensor } else { 1.0 };
    let offset = mean_lab - gain * mean_sensor;

    let residual_rmse = (pairs
        .iter()
        .map(|p| (gain * p.0 + offset - p.1).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();

    let corrected = readings
        .iter()
        .map(|r| NitrateReading {
            timestamp: r.timestamp,
            concentration_mg_l: gain * r.concentration_mg_l + offset,
            flag: r.flag.clone(),
        })
        .collect();

    Ok((
        corrected,
        CalibrationReport {
            gain,
            offset_mg_l: offset,
            residual_rmse_mg_l: residual_rmse,
            n_pairs: pairs.len(),
            lab_match_window_minutes: lab_window_minutes,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, TimeZone, Utc};

    fn readings(values: &[f64]) -> Vec<NitrateReading> {
        let start = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| NitrateReading {
                timestamp: start + Duration::minutes(10 * i as i64),
                concentration_mg_l: v,
                flag: "ok".to_string(),
            })
            .collect()
    }

    fn labs_at(readings: &[NitrateReading], idx: &[usize], values: &[f64]) -> Vec<LabSample> {
        idx.iter()
            .zip(values)
            .map(|(&i, &v)| LabSample {
                timestamp: readings[i].timestamp,
                nitrate_mg_l: v,
            })
            .collect()
    }

    #[test]
    fn identity_when_labs_match_sensor() {
        let r = readings(&[0.10, 0.15, 0.20, 0.25]);
        let labs = labs_at(&r, &[0, 2], &[0.10, 0.20]);
        let (corrected, report) = drift_calibrate(&r, &labs, 30).unwrap();
        assert!((report.gain - 1.0).abs() < 1e-12);
        assert!(report.offset_mg_l.abs() < 1e-12);
        for (a, b) in corrected.iter().zip(&r) {
            assert!((a.concentration_mg_l - b.concentration_mg_l).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_offset_recovered() {
        // sensor reads lab + 0.01 everywhere -> gain 1, offset -0.01
        let r = readings(&[0.11, 0.16, 0.21]);
        let labs = labs_at(&r, &[0, 1, 2], &[0.10, 0.15, 0.20]);
        let (_, report) = drift_calibrate(&r, &labs, 30).unwrap();
        assert!((report.gain - 1.0).abs() < 1e-12);
        assert!((report.offset_mg_l + 0.01).abs() < 1e-12);
        assert!(report.residual_rmse_mg_l < 1e-12);
    }

    #[test]
    fn exact_offset_fixture() {
        // (sensor, lab) = (0.10, 0.12), (0.20, 0.22), (0.30, 0.32)
        let r = readings(&[0.10, 0.20, 0.30]);
        let labs = labs_at(&r, &[0, 1, 2], &[0.12, 0.22, 0.32]);
        let (corrected, report) = drift_calibrate(&r, &labs, 30).unwrap();
        assert!((report.gain - 1.0).abs() < 1e-12);
        assert!((report.offset_mg_l - 0.02).abs() < 1e-12);
        assert!(report.residual_rmse_mg_l < 1e-12);
        assert!((corrected[0].concentration_mg_l - 0.12).abs() < 1e-12);
    }

    #[test]
    fn recalibration_is_a_fixed_point() {
        let r = readings(&[0.10, 0.18, 0.26, 0.31]);
        let labs = labs_at(&r, &[0, 1, 2, 3], &[0.12, 0.21, 0.30, 0.35]);
        let (corrected, _) = drift_calibrate(&r, &labs, 30).unwrap();
        let (_, second) = drift_calibrate(&corrected, &labs, 30).unwrap();
        assert!((second.gain - 1.0).abs() < 1e-9);
        assert!(second.offset_mg_l.abs() < 1e-9);
    }

    #[test]
    fn too_few_labs_rejected() {
        let r = readings(&[0.1, 0.2]);
        let labs = labs_at(&r, &[0], &[0.1]);
        assert!(matches!(
            drift_calibrate(&r, &labs, 30),
            Err(IngestError::InsufficientLabSamples { got: 1 })
        ));
    }

    #[test]
    fn distant_lab_sample_rejected() {
        let r = readings(&[0.1, 0.2]);
        let mut labs = labs_at(&r, &[0, 1], &[0.1, 0.2]);
        labs[1].timestamp = labs[1].timestamp + Duration::hours(2);
        assert!(matches!(
            drift_calibrate(&r, &labs, 30),
            Err(IngestError::UnmatchableLabSample { .. })
        ));
    }

    #[test]
    fn constant_sensor_fits_offset_only() {
        let r = readings(&[0.2, 0.2, 0.2]);
        let labs = labs_at(&r, &[0, 2], &[0.25, 0.25]);
        let (_, report) = drift_calibrate(&r, &labs, 30).unwrap();
        assert!((report.gain - 1.0).abs() < 1e-12);
        assert!((report.offset_mg_l - 0.05).abs() < 1e-12);
    }
}
