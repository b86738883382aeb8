//! Automated spectrum quality control. Rejection is a result, not an error;
//! the same spectrum and thresholds always produce the same verdict.

use super::{RadiometricScan, ReflectanceSpectrum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    /// Fraction of negative bands above threshold.
    NegativeBands,
    /// Band-to-band jump larger than `spike_ratio` times the local median.
    Spike,
    /// Downwelling irradiance too low for a trustworthy ratio.
    LowEd,
    /// Radiance at or above the sensor saturation level.
    Saturation,
    /// Reflectance outside the plausible range for water.
    OutOfRangeShape,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QcResult {
    pub accepted: bool,
    pub reasons: Vec<RejectReason>,
}

impl QcResult {
    fn from_reasons(reasons: Vec<RejectReason>) -> Self {
        Self {
            accepted: reasons.is_empty(),
            reasons,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QcThresholds {
    /// Maximum tolerated fraction of negative bands.
    pub max_negative_fraction: f64,
    /// Band-to-band jump threshold as a multiple of the local median magnitude.
    pub spike_ratio: f64,
    /// Absolute floor added to the local median so near-zero spectra do not
    /// trip the spike test on noise.
    pub spike_floor_sr: f64,
    /// Reflectance ceiling (sr^-1).
    pub rrs_ceiling_sr: f64,
    /// Scans whose median irradiance falls below this are unusable (W m^-2 nm^-1).
    pub min_median_ed: f64,
    /// Optional radiance saturation level (W m^-2 sr^-1 nm^-1).
    pub saturation_radiance: Option<f64>,
}

impl Default for QcThresholds {
    fn default() -> Self {
        Self {
            max_negative_fraction: 0.02,
            spike_ratio: 5.0,
            spike_floor_sr: 1e-5,
            rrs_ceiling_sr: 0.1,
            min_median_ed: 0.01,
            saturation_radiance: None,
        }
    }
}

const SPIKE_HALF_WINDOW: usize = 5;

/// Spectrum-only checks: negative-band fraction, single-band spikes, and the
/// reflectance ceiling.
pub fn quality_filter(spec: &ReflectanceSpectrum, thresholds: &QcThresholds) -> QcResult {
    let mut reasons = Vec::new();
    let n = spec.rrs.len();
    if n == 0 {
        return QcResult::from_reasons(vec![RejectReason::OutOfRangeShape]);
    }

    let negative = spec.rrs.iter().filter(|&&r| r < 0.0).count();
    if negative as f64 / n as f64 > thresholds.max_negative_fraction {
        reasons.push(RejectReason::NegativeBands);
    }

    if has_spike(&spec.rrs, thresholds) {
        reasons.push(RejectReason::Spike);
    }

    if spec
        .rrs
        .iter()
        .any(|&r| !r.is_finite() || r > thresholds.rrs_ceiling_sr)
    {
        reasons.push(RejectReason::OutOfRangeShape);
    }

    QcResult::from_reasons(reasons)
}

/// Full checks: everything in [`quality_filter`] plus irradiance floor and
/// radiance saturation, which need the originating scan.
pub fn quality_filter_scan(
    scan: &RadiometricScan,
    spec: &ReflectanceSpectrum,
    thresholds: &QcThresholds,
) -> QcResult {
    let mut reasons = quality_filter(spec, thresholds).reasons;

    if median(&scan.ed) < thresholds.min_median_ed {
        reasons.push(RejectReason::LowEd);
    }
    if let Some(sat) = thresholds.saturation_radiance {
        if scan.lw.iter().any(|&l| l >= sat) {
            reasons.push(RejectReason::Saturation);
        }
    }

    QcResult::from_reasons(reasons)
}

fn has_spike(rrs: &[f64], thresholds: &QcThresholds) -> bool {
    let n = rrs.len();
    if n < 3 {
        return false;
    }
    let mut window = Vec::with_capacity(2 * SPIKE_HALF_WINDOW + 1);
    for i in 1..n {
        let jump = (rrs[i] - rrs[i - 1]).abs();
        if jump == 0.0 {
            continue;
        }
        let lo = i.saturating_sub(SPIKE_HALF_WINDOW);
        let hi = (i + SPIKE_HALF_WINDOW).min(n - 1);
        window.clear();
        window.extend(rrs[lo..=hi].iter().map(|r| r.abs()));
        window.sort_by(f64::total_cmp);
        let local = window[window.len() / 2];
        if jump > thresholds.spike_ratio * (local + thresholds.spike_floor_sr) {
            return true;
        }
    }
    false
}

fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[sorted.len() / 2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::WavelengthGrid;
    use crate::spectral::LwSource;
    use chrono::{TimeZone, Utc};

    fn smooth_spectrum() -> ReflectanceSpectrum {
        let grid = WavelengthGrid::standard();
        // Gentle single-peak curve, everywhere positive and below the ceiling.
        let rrs = grid
            .wavelengths()
            .map(|nm| 0.02 * (-((nm - 560.0) / 120.0).powi(2)).exp() + 0.001)
            .collect();
        ReflectanceSpectrum {
            timestamp: Utc.with_ymd_and_hms(2024, 1, 1, 12, 0, 0).unwrap(),
            rrs,
            qc: None,
        }
    }

    #[test]
    fn smooth_spectrum_is_accepted() {
        let qc = quality_filter(&smooth_spectrum(), &QcThresholds::default());
        assert!(qc.accepted);
        assert!(qc.reasons.is_empty());
    }

    #[test]
    fn ten_percent_negative_bands_rejected() {
        let mut spec = smooth_spectrum();
        let n = spec.rrs.len();
        for i in 0..n / 10 {
            spec.rrs[i * 10] = -0.001;
        }
        let qc = quality_filter(&spec, &QcThresholds::default());
        assert!(!qc.accepted);
        assert!(qc.reasons.contains(&RejectReason::NegativeBands));
    }

    #[test]
    fn injected_spike_rejected() {
        let mut spec = smooth_spectrum();
        let i = 175;
        let lo = i - SPIKE_HALF_WINDOW;
        let hi = i + SPIKE_HALF_WINDOW;
        let mut window: Vec<f64> = spec.rrs[lo..=hi].iter().map(|r| r.abs()).collect();
        window.sort_by(f64::total_cmp);
        let local_median = window[window.len() / 2];
        spec.rrs[i] = 20.0 * local_median;
        let qc = quality_filter(&spec, &QcThresholds::default());
        assert!(!qc.accepted);
        assert!(qc.reasons.contains(&RejectReason::Spike));
    }

    #[test]
    fn ceiling_violation_rejected() {
        let mut spec = smooth_spectrum();
        for r in spec.rrs.iter_mut() {
            *r += 0.11;
        }
        let qc = quality_filter(&spec, &QcThresholds::default());
        assert!(qc.reasons.contains(&RejectReason::OutOfRangeShape));
    }

    #[test]
    fn accepted_iff_reasons_empty() {
        let qc = quality_filter(&smooth_spectrum(), &QcThresholds::default());
        assert_eq!(qc.accepted, qc.reasons.is_empty());
        let mut bad = smooth_spectrum();
        bad.rrs.iter_mut().for_each(|r| *r = -*r);
        let qc = quality_filter(&bad, &QcThresholds::default());
        assert_eq!(qc.accepted, qc.reasons.is_empty());
        assert!(!qc.accepted);
    }

    #[test]
    fn deterministic_verdict() {
        let spec = smooth_spectrum();
        let thresholds = QcThresholds::default();
        let a = quality_filter(&spec, &thresholds);
        let b = quality_filter(&spec, &thresholds);
        assert_eq!(a, b);
    }

    #[test]
    fn low_irradiance_rejected_at_scan_level() {
        let grid = WavelengthGrid::standard();
        let spec = smooth_spectrum();
        let scan = RadiometricScan::new(
            spec.timestamp,
            vec![1e-4; grid.count],
            vec![0.01; grid.count],
            vec![0.0; grid.count],
            30.0,
            40.0,
            90.0,
            LwSource::Nadir,
        )
        .unwrap();
        let qc = quality_filter_scan(&scan, &spec, &QcThresholds::default());
        assert!(qc.reasons.contains(&RejectReason::LowEd));
    }

    #[test]
    fn saturation_rejected_when_configured() {
        let grid = WavelengthGrid::standard();
        let spec = smooth_spectrum();
        let scan = RadiometricScan::new(
            spec.timestamp,
            vec![1.0; grid.count],
            vec![5.0; grid.count],
            vec![0.0; grid.count],
            30.0,
            40.0,
            90.0,
            LwSource::Nadir,
        )
        .unwrap();
        let thresholds = QcThresholds {
            saturation_radiance: Some(4.0),
            ..QcThresholds::default()
        };
        let qc = quality_filter_scan(&scan, &spec, &thresholds);
        assert!(qc.reasons.contains(&RejectReason::Saturation));
        let off = quality_filter_scan(&scan, &spec, &QcThresholds::default());
        assert!(!off.reasons.contains(&RejectReason::Saturation));
    }
}
