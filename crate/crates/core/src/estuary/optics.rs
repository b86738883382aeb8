//! Semi-analytical bio-optical forward model: constituent concentrations to
//! remote-sensing reflectance.
//!
//! Total absorption and backscatter are assembled from pure water plus
//! constituent-specific terms, then mapped through the quadratic
//! `Rrs = g1 * u + g2 * u^2` with `u = b_b / (a + b_b)`. Coefficients are
//! synthetic defaults, not field calibrations.

use super::ConfigError;
use crate::grid::WavelengthGrid;
use serde::{Deserialize, Serialize};

/// Pure-water absorption (m^-1) at 10 nm spacing over 400-750 nm.
/// Linearly interpolated onto the working grid.
const WATER_ABSORPTION_10NM: [f64; 36] = [
    0.00663, 0.00473, 0.00454, 0.00495, 0.00635, 0.00922, 0.00979, 0.0106, 0.0127, 0.0150,
    0.0204, 0.0325, 0.0409, 0.0434, 0.0474, 0.0565, 0.0619, 0.0695, 0.0896, 0.1351, 0.2224,
    0.2644, 0.2755, 0.2916, 0.3108, 0.34, 0.41, 0.439, 0.465, 0.516, 0.624, 0.827, 1.231,
    1.799, 2.38, 2.47,
];
const WATER_TABLE_START_NM: f64 = 400.0;
const WATER_TABLE_STEP_NM: f64 = 10.0;

/// Coefficients of the forward model; every term is configurable.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct BioOpticalCoefficients {
    /// Quadratic reflectance coefficients (sr^-1).
    pub g1: f64,
    pub g2: f64,
    /// CDOM spectral slope (nm^-1), referenced to 440 nm.
    pub cdom_slope_nm: f64,
    /// Mineral particle absorption at 440 nm (m^2 g^-1) and slope (nm^-1).
    pub tss_absorption_440: f64,
    pub tss_absorption_slope_nm: f64,
    /// Chlorophyll-specific absorption peak heights (m^2 mg^-1).
    pub chl_absorption_440: f64,
    pub chl_red_peak_ratio: f64,
    /// Particulate backscatter at 550 nm (m^2 g^-1) and spectral exponent.
    pub tss_backscatter_550: f64,
    pub backscatter_exponent: f64,
    /// Pure-water backscatter at 500 nm (m^-1) and spectral exponent.
    pub water_backscatter_500: f64,
    pub water_backscatter_exponent: f64,
}

impl Default for BioOpticalCoefficients {
    fn default() -> Self {
        Self {
            g1: 0.0949,
            g2: 0.0794,
            cdom_slope_nm: 0.015,
            tss_absorption_440: 0.03,
            tss_absorption_slope_nm: 0.011,
            chl_absorption_440: 0.03,
            chl_red_peak_ratio: 0.35,
            tss_backscatter_550: 0.01,
            backscatter_exponent: 0.8,
            water_backscatter_500: 0.00144,
            water_backscatter_exponent: 4.32,
        }
    }
}

impl BioOpticalCoefficients {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (field, v) in [
            ("bio.g1", self.g1),
            ("bio.g2", self.g2),
            ("bio.cdom_slope_nm", self.cdom_slope_nm),
            ("bio.tss_absorption_440", self.tss_absorption_440),
            ("bio.tss_backscatter_550", self.tss_backscatter_550),
            ("bio.water_backscatter_500", self.water_backscatter_500),
        ] {
            if !(v > 0.0) {
                return Err(super::invalid(field, "must be positive"));
            }
        }
        Ok(())
    }

    /// Pure-water absorption interpolated to `nm`.
    pub fn water_absorption(&self, nm: f64) -> f64 {
        let pos = (nm - WATER_TABLE_START_NM) / WATER_TABLE_STEP_NM;
        let i = (pos.floor().max(0.0) as usize).min(WATER_ABSORPTION_10NM.len() - 2);
        let w = (pos - i as f64).clamp(0.0, 1.0);
        WATER_ABSORPTION_10NM[i] * (1.0 - w) + WATER_ABSORPTION_10NM[i + 1] * w
    }

    /// Pure-water backscatter (m^-1) at `nm`.
    pub fn water_backscatter(&self, nm: f64) -> f64 {
        self.water_backscatter_500 * (nm / 500.0).powf(-self.water_backscatter_exponent)
    }

    /// Chlorophyll-specific absorption (m^2 mg^-1): blue and red peaks.
    pub fn chl_absorption(&self, nm: f64) -> f64 {
        let blue = (-((nm - 440.0) / 25.0).powi(2) / 2.0).exp();
        let red = (-((nm - 675.0) / 12.0).powi(2) / 2.0).exp();
        self.chl_absorption_440 * (blue + self.chl_red_peak_ratio * red)
    }

    /// Total absorption (m^-1) at `nm` for the given constituents.
    pub fn total_absorption(&self, nm: f64, tss_mg_l: f64, cdom440_m1: f64, chl_ug_l: f64) -> f64 {
        self.water_absorption(nm)
            + cdom440_m1 * (-self.cdom_slope_nm * (nm - 440.0)).exp()
            + tss_mg_l * self.tss_absorption_440 * (-self.tss_absorption_slope_nm * (nm - 440.0)).exp()
            + chl_ug_l * self.chl_absorption(nm)
    }

    /// Total backscatter (m^-1) at `nm`.
    pub fn total_backscatter(&self, nm: f64, tss_mg_l: f64) -> f64 {
        self.water_backscatter(nm)
            + tss_mg_l * self.tss_backscatter_550 * (nm / 550.0).powf(-self.backscatter_exponent)
    }
}

/// Reflectance spectrum (sr^-1) for the given constituent concentrations.
pub fn forward_rrs(
    tss_mg_l: f64,
    cdom440_m1: f64,
    chl_ug_l: f64,
    coefficients: &BioOpticalCoefficients,
    grid: &WavelengthGrid,
) -> Vec<f64> {
    grid.wavelengths()
        .map(|nm| {
            let a = coefficients.total_absorption(nm, tss_mg_l, cdom440_m1, chl_ug_l);
            let bb = coefficients.total_backscatter(nm, tss_mg_l);
            let u = bb / (a + bb);
            coefficients.g1 * u + coefficients.g2 * u * u
        })
        .collect()
}
