//! The shared wavelength grid all spectra in a dataset conform to.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid grid: start {start_nm} nm, end {end_nm} nm, step {step_nm} nm")]
    InvalidDefinition {
        start_nm: f64,
        end_nm: f64,
        step_nm: f64,
    },
}

/// Uniform wavelength grid. The dataset default is 400–750 nm at 1 nm,
/// i.e. 351 bands; every spectral vector in a dataset shares one grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavelengthGrid {
    pub start_nm: f64,
    pub end_nm: f64,
    pub step_nm: f64,
    pub count: usize,
}

impl WavelengthGrid {
    pub fn new(start_nm: f64, end_nm: f64, step_nm: f64) -> Result<Self, GridError> {
        if !(step_nm > 0.0 && end_nm > start_nm && start_nm > 0.0) {
            return Err(GridError::InvalidDefinition {
                start_nm,
                end_nm,
                step_nm,
            });
        }
        let span = (end_nm - start_nm) / step_nm;
        let count = span.round() as usize + 1;
        // The grid must land exactly on the end wavelength.
        if (span - span.round()).abs() > 1e-9 {
            return Err(GridError::InvalidDefinition {
                start_nm,
                end_nm,
                step_nm,
            });
        }
        Ok(Self {
            start_nm,
            end_nm,
            step_nm,
            count,
        })
    }

    /// The 400–750 nm / 1 nm / 351-band grid.
    pub fn standard() -> Self {
        Self {
            start_nm: 400.0,
            end_nm: 750.0,
            step_nm: 1.0,
            count: 351,
        }
    }

    pub fn wavelength(&self, band: usize) -> f64 {
        self.start_nm + band as f64 * self.step_nm
    }

    pub fn wavelengths(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|i| self.wavelength(i))
    }

    /// Band index of the grid wavelength nearest to `nm` (clamped to range).
    pub fn nearest_band(&self, nm: f64) -> usize {
        let idx = ((nm - self.start_nm) / self.step_nm).round();
        (idx.max(0.0) as usize).min(self.count - 1)
    }

    pub fn conforms(&self, values: &[f64]) -> bool {
        values.len() == self.count
    }
}

impl Default for WavelengthGrid {
    fn default() -> Self {
        Self::standard()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_grid_has_351_bands() {
        let g = WavelengthGrid::standard();
        assert_eq!(g.count, 351);
        assert_eq!(g.wavelength(0), 400.0);
        assert_eq!(g.wavelength(350), 750.0);
    }

    #[test]
    fn count_matches_span_formula() {
        let g = WavelengthGrid::new(400.0, 750.0, 1.0).unwrap();
        assert_eq!(
            g.count,
            ((g.end_nm - g.start_nm) / g.step_nm) as usize + 1
        );
        assert!(g.wavelengths().collect::<Vec<_>>().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rejects_misaligned_end() {
        assert!(WavelengthGrid::new(400.0, 750.5, 1.0).is_err());
        assert!(WavelengthGrid::new(400.0, 750.0, -1.0).is_err());
    }

    #[test]
    fn nearest_band_rounds() {
        let g = WavelengthGrid::standard();
        assert_eq!(g.nearest_band(440.4), 40);
        assert_eq!(g.nearest_band(440.6), 41);
        assert_eq!(g.nearest_band(399.0), 0);
        assert_eq!(g.nearest_band(900.0), 350);
    }
}
