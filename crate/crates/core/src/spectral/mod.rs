//! Radiometric preprocessing: raw irradiance/radiance scans into
//! quality-controlled, geometry-normalized reflectance spectra.
//!
//! All operations here are pure functions of their inputs; values are
//! immutable after construction and safe to process in parallel across scans.

mod brdf;
mod qc;

pub use brdf::{BrdfLut, Geometry};
pub use qc::{quality_filter, quality_filter_scan, QcResult, QcThresholds, RejectReason};

use crate::grid::WavelengthGrid;
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Canonical low-wind skylight reflectance factor; configurable per scan.
pub const DEFAULT_SKYLIGHT_RHO: f64 = 0.028;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("downwelling irradiance must be strictly positive (band {band}, value {value})")]
    NonPositiveIrradiance { band: usize, value: f64 },
    #[error("spectrum has {got} bands but the grid has {expected}")]
    GridMismatch { got: usize, expected: usize },
    #[error("geometry ({sza_deg}, {vza_deg}, {raa_deg}) outside the correction table domain")]
    GeometryOutOfRange {
        sza_deg: f64,
        vza_deg: f64,
        raa_deg: f64,
    },
    #[error("raw spectrum covers {min_nm}-{max_nm} nm, grid needs {need_min_nm}-{need_max_nm} nm")]
    InsufficientCoverage {
        min_nm: f64,
        max_nm: f64,
        need_min_nm: f64,
        need_max_nm: f64,
    },
    #[error("angle {name} = {value} outside [{min}, {max}]")]
    AngleOutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("correction factor {value} at table node {node} outside (0.5, 2.0)")]
    FactorOutOfRange { value: f64, node: usize },
    #[error("correction table is not identity at the reference geometry (factor {value})")]
    ReferenceNotIdentity { value: f64 },
    #[error("correction table node ({sza_deg}, {vza_deg}, {raa_deg}) misses bands")]
    IncompleteTableNode {
        sza_deg: f64,
        vza_deg: f64,
        raa_deg: f64,
    },
}

/// Which upwelling radiance sensor fed the reflectance computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LwSource {
    Nadir,
    TiltedMean,
}

/// One raw radiometric scan: downwelling irradiance, upwelling water-leaving
/// radiance, diffuse skylight radiance, and the sun-target-view geometry.
#[derive(Debug, Clone)]
pub struct RadiometricScan {
    pub timestamp: DateTime<Utc>,
    /// Downwelling irradiance, W m^-2 nm^-1.
    pub ed: Vec<f64>,
    /// Upwelling water-leaving radiance, W m^-2 sr^-1 nm^-1.
    pub lw: Vec<f64>,
    /// Diffuse skylight radiance, same units as `lw`.
    pub lsky: Vec<f64>,
    pub solar_zenith_deg: f64,
    pub view_zenith_deg: f64,
    pub relative_azimuth_deg: f64,
    pub lw_source: LwSource,
}

impl RadiometricScan {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        timestamp: DateTime<Utc>,
        ed: Vec<f64>,
        lw: Vec<f64>,
        lsky: Vec<f64>,
        solar_zenith_deg: f64,
        view_zenith_deg: f64,
        relative_azimuth_deg: f64,
        lw_source: LwSource,
    ) -> Result<Self, SpectralError> {
        check_angle("solar_zenith_deg", solar_zenith_deg, 0.0, 90.0)?;
        check_angle("view_zenith_deg", view_zenith_deg, 0.0, 90.0)?;
        check_angle("relative_azimuth_deg", relative_azimuth_deg, 0.0, 180.0)?;
        Ok(Self {
            timestamp,
            ed,
            lw,
            lsky,
            solar_zenith_deg,
            view_zenith_deg,
            relative_azimuth_deg,
            lw_source,
        })
    }

    pub fn geometry(&self) -> Geometry {
        Geometry {
            sza_deg: self.solar_zenith_deg,
            vza_deg: self.view_zenith_deg,
            raa_deg: self.relative_azimuth_deg,
        }
    }
}

fn check_angle(name: &'static str, value: f64, min: f64, max: f64) -> Result<(), SpectralError> {
    if !(value >= min && value <= max) {
        return Err(SpectralError::AngleOutOfRange {
            name,
            value,
            min,
            max,
        });
    }
    Ok(())
}

/// Water-leaving reflectance on the shared grid (sr^-1).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReflectanceSpectrum {
    pub timestamp: DateTime<Utc>,
    pub rrs: Vec<f64>,
    /// `None` until the spectrum has been through quality control.
    pub qc: Option<QcResult>,
}

/// Skylight-corrected reflectance: `rrs = (lw - rho * lsky) / ed`.
///
/// `rho` is the skylight reflectance factor, expected in [0, 0.1]; the
/// timestamp is carried through and QC is left unevaluated.
pub fn compute_brf(
    scan: &RadiometricScan,
    rho: f64,
    grid: &WavelengthGrid,
) -> Result<ReflectanceSpectrum, SpectralError> {
    debug_assert!((0.0..=0.1).contains(&rho), "rho {rho} outside [0, 0.1]");
    for spectrum in [&scan.ed, &scan.lw, &scan.lsky] {
        if !grid.conforms(spectrum) {
            return Err(SpectralError::GridMismatch {
                got: spectrum.len(),
                expected: grid.count,
            });
        }
    }
    if let Some((band, &value)) = scan.ed.iter().enumerate().find(|(_, &e)| e <= 0.0) {
        return Err(SpectralError::NonPositiveIrradiance { band, value });
    }
    let rrs = scan
        .lw
        .iter()
        .zip(&scan.lsky)
        .zip(&scan.ed)
        .map(|((&lw, &lsky), &ed)| (lw - rho * lsky) / ed)
        .collect();
    Ok(ReflectanceSpectrum {
        timestamp: scan.timestamp,
        rrs,
        qc: None,
    })
}

/// Geometry normalization: multiply band-wise by the interpolated correction
/// factor for the scan geometry. Geometries outside the table domain are
/// rejected, never extrapolated.
pub fn brdf_normalize(
    spec: &ReflectanceSpectrum,
    geometry: Geometry,
    lut: &BrdfLut,
) -> Result<ReflectanceSpectrum, SpectralError> {
    let factors = lut.factors_at(geometry)?;
    if factors.len() != spec.rrs.len() {
        return Err(SpectralError::GridMismatch {
            got: spec.rrs.len(),
            expected: factors.len(),
        });
    }
    let rrs = spec
        .rrs
        .iter()
        .zip(&factors)
        .map(|(&r, &f)| r * f)
        .collect();
    Ok(ReflectanceSpectrum {
        timestamp: spec.timestamp,
        rrs,
        qc: spec.qc.clone(),
    })
}

/// Select the nearest native sample for every grid wavelength. With a native
/// 1 nm step this is pure slicing; no resampling is performed.
pub fn trim_to_grid(
    raw: &[(f64, f64)],
    grid: &WavelengthGrid,
) -> Result<Vec<f64>, SpectralError> {
    if raw.is_empty() {
        return Err(SpectralError::InsufficientCoverage {
            min_nm: f64::NAN,
            max_nm: f64::NAN,
            need_min_nm: grid.start_nm,
            need_max_nm: grid.end_nm,
        });
    }
    let (mut min_nm, mut max_nm) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(nm, _) in raw {
        min_nm = min_nm.min(nm);
        max_nm = max_nm.max(nm);
    }
    if min_nm > grid.start_nm || max_nm < grid.end_nm {
        return Err(SpectralError::InsufficientCoverage {
            min_nm,
            max_nm,
            need_min_nm: grid.start_nm,
            need_max_nm: grid.end_nm,
        });
    }
    let mut sorted: Vec<(f64, f64)> = raw.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::with_capacity(grid.count);
    let mut cursor = 0usize;
    for target in grid.wavelengths() {
        // Advance while the next native sample is at least as close.
        while cursor + 1 < sorted.len()
            && (sorted[cursor + 1].0 - target).abs() <= (sorted[cursor].0 - target).abs()
        {
            cursor += 1;
        }
        out.push(sorted[cursor].1);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use chrono::TimeZone;

    fn ts() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 1, 1, 12, 0, 0).unwrap()
    }

    fn flat_scan(ed: f64, lw: f64, lsky: f64, grid: &WavelengthGrid) -> RadiometricScan {
        RadiometricScan::new(
            ts(),
            vec![ed; grid.count],
            vec![lw; grid.count],
            vec![lsky; grid.count],
            30.0,
            40.0,
            90.0,
            LwSource::Nadir,
        )
        .unwrap()
    }

    #[test]
    fn brf_without_skylight_is_lw_over_ed() {
        let grid = WavelengthGrid::standard();
        let scan = flat_scan(1.0, 0.05, 0.0, &grid);
        let spec = compute_brf(&scan, 0.028, &grid).unwrap();
        assert!(spec.rrs.iter().all(|&r| (r - 0.05).abs() < 1e-15));
        assert_eq!(spec.timestamp, ts());
        assert!(spec.qc.is_none());
    }

    #[test]
    fn brf_cancels_when_lw_equals_rho_lsky() {
        let grid = WavelengthGrid::standard();
        let rho = 0.028;
        let lsky = 0.5;
        let scan = flat_scan(1.0, rho * lsky, lsky, &grid);
        let spec = compute_brf(&scan, rho, &grid).unwrap();
        assert!(spec.rrs.iter().all(|&r| r.abs() < 1e-15));
    }

    #[test]
    fn brf_direct_arithmetic() {
        let grid = WavelengthGrid::standard();
        let scan = flat_scan(1.0, 0.05, 0.5, &grid);
        let spec = compute_brf(&scan, 0.028, &grid).unwrap();
        for &r in &spec.rrs {
            assert_relative_eq!(r, 0.036, max_relative = 1e-12);
        }
    }

    #[test]
    fn brf_is_linear_in_lw() {
        let grid = WavelengthGrid::standard();
        let single = compute_brf(&flat_scan(1.3, 0.04, 0.0, &grid), 0.0, &grid).unwrap();
        let doubled = compute_brf(&flat_scan(1.3, 0.08, 0.0, &grid), 0.0, &grid).unwrap();
        for (a, b) in single.rrs.iter().zip(&doubled.rrs) {
            assert_relative_eq!(2.0 * a, *b, max_relative = 1e-14);
        }
    }

    #[test]
    fn brf_monotone_in_rho() {
        let grid = WavelengthGrid::standard();
        let scan = flat_scan(1.0, 0.05, 0.4, &grid);
        let zero = compute_brf(&scan, 0.0, &grid).unwrap();
        let some = compute_brf(&scan, 0.05, &grid).unwrap();
        for (a, b) in zero.rrs.iter().zip(&some.rrs) {
            assert!(a >= b);
        }
    }

    #[test]
    fn brf_rejects_nonpositive_irradiance() {
        let grid = WavelengthGrid::standard();
        let mut scan = flat_scan(1.0, 0.05, 0.0, &grid);
        scan.ed[17] = 0.0;
        match compute_brf(&scan, 0.028, &grid) {
            Err(SpectralError::NonPositiveIrradiance { band: 17, .. }) => {}
            other => panic!("expected NonPositiveIrradiance, got {other:?}"),
        }
    }

    #[test]
    fn brf_rejects_grid_mismatch() {
        let grid = WavelengthGrid::standard();
        let mut scan = flat_scan(1.0, 0.05, 0.0, &grid);
        scan.lw.pop();
        assert!(matches!(
            compute_brf(&scan, 0.028, &grid),
            Err(SpectralError::GridMismatch { .. })
        ));
    }

    #[test]
    fn scan_rejects_bad_angles() {
        let grid = WavelengthGrid::standard();
        let n = grid.count;
        let bad = RadiometricScan::new(
            ts(),
            vec![1.0; n],
            vec![0.0; n],
            vec![0.0; n],
            95.0,
            40.0,
            90.0,
            LwSource::Nadir,
        );
        assert!(matches!(bad, Err(SpectralError::AngleOutOfRange { .. })));
    }

    #[test]
    fn trim_slices_wide_native_range() {
        let grid = WavelengthGrid::standard();
        let raw: Vec<(f64, f64)> = (350..=900).map(|nm| (nm as f64, nm as f64 * 2.0)).collect();
        let out = trim_to_grid(&raw, &grid).unwrap();
        assert_eq!(out.len(), 351);
        assert_eq!(out[0], 800.0);
        assert_eq!(out[350], 1500.0);
    }

    #[test]
    fn trim_exact_range_is_identity() {
        let grid = WavelengthGrid::standard();
        let raw: Vec<(f64, f64)> = grid.wavelengths().map(|nm| (nm, nm.sin())).collect();
        let out = trim_to_grid(&raw, &grid).unwrap();
        let expected: Vec<f64> = raw.iter().map(|&(_, v)| v).collect();
        assert_eq!(out, expected);
    }

    #[test]
    fn trim_rejects_missing_blue_coverage() {
        let grid = WavelengthGrid::standard();
        let raw: Vec<(f64, f64)> = (450..=750).map(|nm| (nm as f64, 1.0)).collect();
        assert!(matches!(
            trim_to_grid(&raw, &grid),
            Err(SpectralError::InsufficientCoverage { .. })
        ));
    }

    #[test]
    fn trim_is_idempotent() {
        let grid = WavelengthGrid::standard();
        let raw: Vec<(f64, f64)> = (380..=800)
            .map(|nm| (nm as f64, (nm as f64 / 100.0).cos()))
            .collect();
        let once = trim_to_grid(&raw, &grid).unwrap();
        let again_input: Vec<(f64, f64)> =
            grid.wavelengths().zip(once.iter().copied()).collect();
        let twice = trim_to_grid(&again_input, &grid).unwrap();
        assert_eq!(once, twice);
    }
}
