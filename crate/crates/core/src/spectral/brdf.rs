//! Geometry-correction lookup table with trilinear interpolation over
//! (solar zenith, view zenith, relative azimuth) nodes.

use super::SpectralError;
use crate::grid::WavelengthGrid;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Sun-target-view geometry in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub sza_deg: f64,
    pub vza_deg: f64,
    pub raa_deg: f64,
}

/// Geometry nodes the default table spans: solar zenith 0-80 deg step 10,
/// view zenith 0-60 deg step 10, relative azimuth 0-180 deg step 30.
pub const DEFAULT_SZA_NODES: [f64; 9] = [0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0];
pub const DEFAULT_VZA_NODES: [f64; 7] = [0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0];
pub const DEFAULT_RAA_NODES: [f64; 7] = [0.0, 30.0, 60.0, 90.0, 120.0, 150.0, 180.0];

/// Reference geometry observations are normalized to.
pub const REFERENCE_GEOMETRY: Geometry = Geometry {
    sza_deg: 30.0,
    vza_deg: 40.0,
    raa_deg: 90.0,
};

/// Per-band multiplicative correction factors on a 3-D geometry node grid.
///
/// Factors must lie in (0.5, 2.0) and the table must be identity at the
/// reference geometry.
#[derive(Debug, Clone)]
pub struct BrdfLut {
    sza_nodes: Vec<f64>,
    vza_nodes: Vec<f64>,
    raa_nodes: Vec<f64>,
    n_bands: usize,
    /// Row-major over (sza, vza, raa), then band.
    factors: Vec<f64>,
    reference: Geometry,
}

impl BrdfLut {
    /// Identity table over the default node grid: every factor is 1.
    pub fn identity(grid: &WavelengthGrid) -> Self {
        let sza = DEFAULT_SZA_NODES.to_vec();
        let vza = DEFAULT_VZA_NODES.to_vec();
        let raa = DEFAULT_RAA_NODES.to_vec();
        let n = sza.len() * vza.len() * raa.len() * grid.count;
        Self {
            sza_nodes: sza,
            vza_nodes: vza,
            raa_nodes: raa,
            n_bands: grid.count,
            factors: vec![1.0; n],
            reference: REFERENCE_GEOMETRY,
        }
    }

    pub fn from_parts(
        sza_nodes: Vec<f64>,
        vza_nodes: Vec<f64>,
        raa_nodes: Vec<f64>,
        n_bands: usize,
        factors: Vec<f64>,
        reference: Geometry,
    ) -> Result<Self, SpectralError> {
        assert_eq!(
            factors.len(),
            sza_nodes.len() * vza_nodes.len() * raa_nodes.len() * n_bands,
            "factor table size must match node grid"
        );
        let lut = Self {
            sza_nodes,
            vza_nodes,
            raa_nodes,
            n_bands,
            factors,
            reference,
        };
        lut.validate()?;
        Ok(lut)
    }

    fn validate(&self) -> Result<(), SpectralError> {
        for (node, &f) in self.factors.iter().enumerate() {
            if !(f > 0.5 && f < 2.0) {
                return Err(SpectralError::FactorOutOfRange { value: f, node });
            }
        }
        let at_ref = self.factors_at(self.reference)?;
        for &f in &at_ref {
            if (f - 1.0).abs() > 1e-6 {
                return Err(SpectralError::ReferenceNotIdentity { value: f });
            }
        }
        Ok(())
    }

    /// Load from CSV with columns `sza_deg,vza_deg,raa_deg,wavelength_nm,factor`.
    /// Every node must provide a factor for every grid wavelength.
    pub fn from_csv(
        path: &Path,
        grid: &WavelengthGrid,
        reference: Geometry,
    ) -> Result<Self, BrdfLoadError> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| BrdfLoadError::Io(path.display().to_string(), e.to_string()))?;
        // node key (milli-degree integers) -> band -> factor
        let mut table: BTreeMap<(i64, i64, i64), Vec<Option<f64>>> = BTreeMap::new();
        for (i, record) in reader.deserialize::<LutRow>().enumerate() {
            let row = record.map_err(|e| BrdfLoadError::Row(i + 2, e.to_string()))?;
            let key = (key_of(row.sza_deg), key_of(row.vza_deg), key_of(row.raa_deg));
            let band = grid.nearest_band(row.wavelength_nm);
            if (grid.wavelength(band) - row.wavelength_nm).abs() > grid.step_nm / 2.0 + 1e-9 {
                return Err(BrdfLoadError::Row(
                    i + 2,
                    format!("wavelength {} nm is off the grid", row.wavelength_nm),
                ));
            }
            table.entry(key).or_insert_with(|| vec![None; grid.count])[band] = Some(row.factor);
        }
        if table.is_empty() {
            return Err(BrdfLoadError::Empty(path.display().to_string()));
        }
        let mut sza: Vec<i64> = table.keys().map(|k| k.0).collect();
        let mut vza: Vec<i64> = table.keys().map(|k| k.1).collect();
        let mut raa: Vec<i64> = table.keys().map(|k| k.2).collect();
        for axis in [&mut sza, &mut vza, &mut raa] {
            axis.sort_unstable();
            axis.dedup();
        }
        let mut factors = Vec::with_capacity(sza.len() * vza.len() * raa.len() * grid.count);
        for &s in &sza {
            for &v in &vza {
                for &r in &raa {
                    let bands = table.get(&(s, v, r)).ok_or(BrdfLoadError::MissingNode {
                        sza_deg: unkey(s),
                        vza_deg: unkey(v),
                        raa_deg: unkey(r),
                    })?;
                    for (band, f) in bands.iter().enumerate() {
                        factors.push(f.ok_or(BrdfLoadError::MissingBand {
                            sza_deg: unkey(s),
                            vza_deg: unkey(v),
                            raa_deg: unkey(r),
                            wavelength_nm: grid.wavelength(band),
                        })?);
                    }
                }
            }
        }
        let lut = Self::from_parts(
            sza.into_iter().map(unkey).collect(),
            vza.into_iter().map(unkey).collect(),
            raa.into_iter().map(unkey).collect(),
            grid.count,
            factors,
            reference,
        )?;
        Ok(lut)
    }

    pub fn reference(&self) -> Geometry {
        self.reference
    }

    /// Trilinearly interpolated per-band factors at `g`.
    pub fn factors_at(&self, g: Geometry) -> Result<Vec<f64>, SpectralError> {
        let out_of_range = || SpectralError::GeometryOutOfRange {
            sza_deg: g.sza_deg,
            vza_deg: g.vza_deg,
            raa_deg: g.raa_deg,
        };
        let (i_s, w_s) = bracket(&self.sza_nodes, g.sza_deg).ok_or_else(out_of_range)?;
        let (i_v, w_v) = bracket(&self.vza_nodes, g.vza_deg).ok_or_else(out_of_range)?;
        let (i_r, w_r) = bracket(&self.raa_nodes, g.raa_deg).ok_or_else(out_of_range)?;

        let mut out = vec![0.0; self.n_bands];
        for (ds, ws) in [(0usize, 1.0 - w_s), (1, w_s)] {
            if ws == 0.0 {
                continue;
            }
            for (dv, wv) in [(0usize, 1.0 - w_v), (1, w_v)] {
                if wv == 0.0 {
                    continue;
                }
                for (dr, wr) in [(0usize, 1.0 - w_r), (1, w_r)] {
                    if wr == 0.0 {
                        continue;
                    }
                    let base = self.node_offset(i_s + ds, i_v + dv, i_r + dr);
                    let w = ws * wv * wr;
                    for (o, f) in out.iter_mut().zip(&self.factors[base..base + self.n_bands]) {
                        *o += w * f;
                    }
                }
            }
        }
        Ok(out)
    }

    fn node_offset(&self, i_s: usize, i_v: usize, i_r: usize) -> usize {
        ((i_s * self.vza_nodes.len() + i_v) * self.raa_nodes.len() + i_r) * self.n_bands
    }
}

/// Find the lower bracketing node and the interpolation weight toward the
/// upper node. Values outside the node span return `None`; a single-node axis
/// accepts only (approximately) that node.
fn bracket(nodes: &[f64], value: f64) -> Option<(usize, f64)> {
    let first = *nodes.first()?;
    let last = *nodes.last()?;
    if value < first || value > last {
        return None;
    }
    if nodes.len() == 1 {
        return if (value - first).abs() <= 1e-9 {
            Some((0, 0.0))
        } else {
            None
        };
    }
    let hi = nodes.partition_point(|&n| n < value).min(nodes.len() - 1);
    let lo = hi.saturating_sub(1);
    if value <= nodes[lo] {
        return Some((lo, 0.0));
    }
    let w = (value - nodes[lo]) / (nodes[hi] - nodes[lo]);
    Some((lo, w))
}

#[derive(Debug, thiserror::Error)]
pub enum BrdfLoadError {
    #[error("cannot read correction table {0}: {1}")]
    Io(String, String),
    #[error("correction table row {0}: {1}")]
    Row(usize, String),
    #[error("correction table {0} has no rows")]
    Empty(String),
    #[error("correction table misses node ({sza_deg}, {vza_deg}, {raa_deg})")]
    MissingNode {
        sza_deg: f64,
        vza_deg: f64,
        raa_deg: f64,
    },
    #[error("correction table misses {wavelength_nm} nm at node ({sza_deg}, {vza_deg}, {raa_deg})")]
    MissingBand {
        sza_deg: f64,
        vza_deg: f64,
        raa_deg: f64,
        wavelength_nm: f64,
    },
    #[error(transparent)]
    Invalid(#[from] SpectralError),
}

#[derive(Debug, Deserialize)]
struct LutRow {
    sza_deg: f64,
    vza_deg: f64,
    raa_deg: f64,
    wavelength_nm: f64,
    factor: f64,
}

fn key_of(deg: f64) -> i64 {
    (deg * 1000.0).round() as i64
}

fn unkey(key: i64) -> f64 {
    key as f64 / 1000.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{brdf_normalize, ReflectanceSpectrum};
    use chrono::{TimeZone, Utc};

    fn tiny_grid() -> WavelengthGrid {
        WavelengthGrid::new(400.0, 402.0, 1.0).unwrap()
    }

    /// 2x2x2 table whose factor varies only along solar zenith.
    fn two_node_lut(lo: f64, hi: f64, grid: &WavelengthGrid) -> BrdfLut {
        let mut factors = Vec::new();
        for &s in &[lo, hi] {
            for _v in 0..2 {
                for _r in 0..2 {
                    factors.extend(std::iter::repeat(s).take(grid.count));
                }
            }
        }
        BrdfLut::from_parts(
            vec![0.0, 10.0],
            vec![0.0, 10.0],
            vec![0.0, 30.0],
            grid.count,
            factors,
            // lo-node corner is the identity reference
            Geometry {
                sza_deg: 0.0,
                vza_deg: 0.0,
                raa_deg: 0.0,
            },
        )
        .unwrap()
    }

    fn spectrum(value: f64, grid: &WavelengthGrid) -> ReflectanceSpectrum {
        ReflectanceSpectrum {
            timestamp: Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap(),
            rrs: vec![value; grid.count],
            qc: None,
        }
    }

    #[test]
    fn identity_at_reference_geometry() {
        let grid = WavelengthGrid::standard();
        let lut = BrdfLut::identity(&grid);
        let spec = spectrum(0.03, &grid);
        let out = brdf_normalize(&spec, lut.reference(), &lut).unwrap();
        for (a, b) in out.rrs.iter().zip(&spec.rrs) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn uniform_factor_scales_every_band() {
        let grid = tiny_grid();
        let mut factors = vec![1.1; 2 * 2 * 2 * grid.count];
        // keep the reference corner at identity
        for f in factors.iter_mut().take(grid.count) {
            *f = 1.0;
        }
        let lut = BrdfLut::from_parts(
            vec![0.0, 10.0],
            vec![0.0, 10.0],
            vec![0.0, 30.0],
            grid.count,
            factors,
            Geometry {
                sza_deg: 0.0,
                vza_deg: 0.0,
                raa_deg: 0.0,
            },
        )
        .unwrap();
        let spec = spectrum(0.02, &grid);
        let out = brdf_normalize(
            &spec,
            Geometry {
                sza_deg: 10.0,
                vza_deg: 10.0,
                raa_deg: 30.0,
            },
            &lut,
        )
        .unwrap();
        for &r in &out.rrs {
            assert!((r - 0.022).abs() < 1e-15);
        }
    }

    #[test]
    fn midpoint_interpolates_between_bins() {
        // Hand-computed trilinear on a 2x2x2 table: factors 1.0 and 1.2 along
        // solar zenith, query midway -> 0.5 * 1.0 + 0.5 * 1.2 = 1.1.
        let grid = tiny_grid();
        let lut = two_node_lut(1.0, 1.2, &grid);
        let f = lut
            .factors_at(Geometry {
                sza_deg: 5.0,
                vza_deg: 0.0,
                raa_deg: 0.0,
            })
            .unwrap();
        for &v in &f {
            assert!((v - 1.1).abs() < 1e-12);
        }
    }

    #[test]
    fn center_of_cube_averages_corners() {
        let grid = WavelengthGrid::new(500.0, 500.0, 1.0);
        // single-band grid is invalid (end == start); use the tiny grid instead
        assert!(grid.is_err());
        let grid = tiny_grid();
        // corner factors 0.8..1.5 chosen distinct; center = mean of corners
        let corners = [0.8, 0.9, 1.0, 1.0, 1.1, 1.2, 1.3, 1.5];
        let mut factors = Vec::new();
        for &c in &corners {
            factors.extend(std::iter::repeat(c).take(grid.count));
        }
        // reference at the third corner, which is exactly 1.0
        let lut = BrdfLut::from_parts(
            vec![0.0, 10.0],
            vec![0.0, 10.0],
            vec![0.0, 30.0],
            grid.count,
            factors,
            Geometry {
                sza_deg: 0.0,
                vza_deg: 10.0,
                raa_deg: 0.0,
            },
        )
        .unwrap();
        let f = lut
            .factors_at(Geometry {
                sza_deg: 5.0,
                vza_deg: 5.0,
                raa_deg: 15.0,
            })
            .unwrap();
        let mean = corners.iter().sum::<f64>() / 8.0;
        for &v in &f {
            assert!((v - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_geometry_outside_domain() {
        let grid = WavelengthGrid::standard();
        let lut = BrdfLut::identity(&grid);
        let bad = Geometry {
            sza_deg: 85.0,
            vza_deg: 40.0,
            raa_deg: 90.0,
        };
        assert!(matches!(
            lut.factors_at(bad),
            Err(SpectralError::GeometryOutOfRange { .. })
        ));
    }

    #[test]
    fn rejects_out_of_bound_factors() {
        let grid = tiny_grid();
        let mut factors = vec![1.0; 8 * grid.count];
        factors[grid.count] = 2.5;
        let err = BrdfLut::from_parts(
            vec![0.0, 10.0],
            vec![0.0, 10.0],
            vec![0.0, 30.0],
            grid.count,
            factors,
            Geometry {
                sza_deg: 0.0,
                vza_deg: 0.0,
                raa_deg: 0.0,
            },
        );
        assert!(matches!(err, Err(SpectralError::FactorOutOfRange { .. })));
    }

    #[test]
    fn rejects_non_identity_reference() {
        let grid = tiny_grid();
        let factors = vec![1.3; 8 * grid.count];
        let err = BrdfLut::from_parts(
            vec![0.0, 10.0],
            vec![0.0, 10.0],
            vec![0.0, 30.0],
            grid.count,
            factors,
            Geometry {
                sza_deg: 0.0,
                vza_deg: 0.0,
                raa_deg: 0.0,
            },
        );
        assert!(matches!(err, Err(SpectralError::ReferenceNotIdentity { .. })));
    }

    #[test]
    fn csv_round_trip() {
        let grid = tiny_grid();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lut.csv");
        let mut body = String::from("sza_deg,vza_deg,raa_deg,wavelength_nm,factor\n");
        for &s in &[0.0, 10.0] {
            for &v in &[0.0, 10.0] {
                for &r in &[0.0, 30.0] {
                    for nm in [400.0, 401.0, 402.0] {
                        let f = if s == 0.0 { 1.0 } else { 1.2 };
                        body.push_str(&format!("{s},{v},{r},{nm},{f}\n"));
                    }
                }
            }
        }
        std::fs::write(&path, body).unwrap();
        let lut = BrdfLut::from_csv(
            &path,
            &grid,
            Geometry {
                sza_deg: 0.0,
                vza_deg: 0.0,
                raa_deg: 0.0,
            },
        )
        .unwrap();
        let f = lut
            .factors_at(Geometry {
                sza_deg: 5.0,
                vza_deg: 10.0,
                raa_deg: 30.0,
            })
            .unwrap();
        for &v in &f {
            assert!((v - 1.1).abs() < 1e-12);
        }
    }
}
