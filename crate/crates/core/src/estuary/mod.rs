//! Synthetic estuary oracle: tidally forced conservative mixing of two water
//! masses plus a semi-analytical bio-optical forward model. Generates labeled
//! campaigns in the exact file formats the ingest stage consumes, so the full
//! pipeline can be validated against known truth.

mod campaign;
mod optics;
mod tide;

pub use campaign::{generate_campaign, CampaignSummary, TruthRecord};
pub use optics::{forward_rrs, BioOpticalCoefficients};
pub use tide::{mixing_fraction, tidal_elevation, water_state, NoiseDraws, WaterState};

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Principal lunar semidiurnal period, hours.
pub const M2_PERIOD_HOURS: f64 = 12.4206012;
/// Principal solar semidiurnal period, hours.
pub const S2_PERIOD_HOURS: f64 = 12.0;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

/// One harmonic constituent of the tidal elevation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TidalConstituent {
    pub name: String,
    pub period_hours: f64,
    pub amplitude_m: f64,
    pub phase_rad: f64,
}

impl TidalConstituent {
    pub fn m2(amplitude_m: f64) -> Self {
        Self {
            name: "M2".to_string(),
            period_hours: M2_PERIOD_HOURS,
            amplitude_m,
            phase_rad: 0.0,
        }
    }

    pub fn s2(amplitude_m: f64) -> Self {
        Self {
            name: "S2".to_string(),
            period_hours: S2_PERIOD_HOURS,
            amplitude_m,
            phase_rad: 0.0,
        }
    }
}

/// Constituent concentrations of one end-member water mass.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EndMemberWaterMass {
    pub salinity_psu: f64,
    pub nitrate_mg_l: f64,
    pub tss_mg_l: f64,
    pub cdom440_m1: f64,
    pub chl_ug_l: f64,
}

/// Relative (lognormal) noise levels per simulated variable; zero disables.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseLevels {
    pub nitrate: f64,
    pub tss: f64,
    pub cdom: f64,
    pub chl: f64,
    pub salinity: f64,
    /// Per-band multiplicative noise on emitted reflectance.
    pub rrs: f64,
}

impl Default for NoiseLevels {
    fn default() -> Self {
        Self {
            nitrate: 0.03,
            tss: 0.05,
            cdom: 0.05,
            chl: 0.10,
            salinity: 0.005,
            rrs: 0.01,
        }
    }
}

impl NoiseLevels {
    pub fn off() -> Self {
        Self {
            nitrate: 0.0,
            tss: 0.0,
            cdom: 0.0,
            chl: 0.0,
            salinity: 0.0,
            rrs: 0.0,
        }
    }
}

/// A sensor outage window; readings of all streams inside it are dropped.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GapWindow {
    pub start_hours: f64,
    pub hours: f64,
}

/// Full simulator configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EstuaryConfig {
    pub seed: u64,
    pub start_utc: DateTime<Utc>,
    pub days: f64,
    pub constituents: Vec<TidalConstituent>,
    pub river: EndMemberWaterMass,
    pub sea: EndMemberWaterMass,
    /// Mean seawater fraction.
    pub mixing_f0: f64,
    /// Tidal modulation strength of the seawater fraction.
    pub mixing_beta: f64,
    pub noise: NoiseLevels,
    pub gaps: Vec<GapWindow>,
    pub nitrate_cadence_minutes: i64,
    pub salinity_cadence_minutes: i64,
    pub scan_cadence_minutes: i64,
    /// Nitrate sensor quantization step (mg/L); zero disables.
    pub nitrate_precision_mg_l: f64,
    /// Simulated nitrate sensor drift: reading = gain * value + offset.
    pub sensor_drift_gain: f64,
    pub sensor_drift_offset_mg_l: f64,
    pub lab_sample_count: usize,
    pub lab_noise_rel: f64,
    /// Skylight reflectance factor used when synthesizing scans.
    pub skylight_rho: f64,
    /// Optional first-order nitrate decay toward zero (1/day); off by default.
    pub nitrate_decay_per_day: f64,
    pub bio: BioOpticalCoefficients,
}

impl Default for EstuaryConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            start_utc: Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap(),
            days: 150.0,
            constituents: vec![TidalConstituent::m2(1.2), TidalConstituent::s2(0.4)],
            river: EndMemberWaterMass {
                salinity_psu: 0.5,
                nitrate_mg_l: 0.20,
                tss_mg_l: 20.0,
                cdom440_m1: 1.5,
                chl_ug_l: 4.0,
            },
            sea: EndMemberWaterMass {
                salinity_psu: 35.0,
                nitrate_mg_l: 0.02,
                tss_mg_l: 2.0,
                cdom440_m1: 0.10,
                chl_ug_l: 0.5,
            },
            mixing_f0: 0.5,
            mixing_beta: 0.45,
            noise: NoiseLevels::default(),
            gaps: vec![
                GapWindow {
                    start_hours: 600.0,
                    hours: 40.0,
                },
                GapWindow {
                    start_hours: 1400.0,
                    hours: 30.0,
                },
                GapWindow {
                    start_hours: 2200.0,
                    hours: 50.0,
                },
                GapWindow {
                    start_hours: 3000.0,
                    hours: 24.0,
                },
            ],
            nitrate_cadence_minutes: 10,
            salinity_cadence_minutes: 10,
            scan_cadence_minutes: 15,
            nitrate_precision_mg_l: 0.005,
            sensor_drift_gain: 1.03,
            sensor_drift_offset_mg_l: 0.005,
            lab_sample_count: 12,
            lab_noise_rel: 0.0,
            skylight_rho: crate::spectral::DEFAULT_SKYLIGHT_RHO,
            nitrate_decay_per_day: 0.0,
            bio: BioOpticalCoefficients::default(),
        }
    }
}

impl EstuaryConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.days > 0.0) {
            return Err(invalid("days", "must be positive"));
        }
        for c in &self.constituents {
            if !(c.period_hours > 0.0) {
                return Err(invalid(
                    &format!("constituents.{}.period_hours", c.name),
                    "must be positive",
                ));
            }
            if c.amplitude_m < 0.0 {
                return Err(invalid(
                    &format!("constituents.{}.amplitude_m", c.name),
                    "must be non-negative",
                ));
            }
        }
        for (name, w) in [("river", &self.river), ("sea", &self.sea)] {
            for (field, v) in [
                ("salinity_psu", w.salinity_psu),
                ("nitrate_mg_l", w.nitrate_mg_l),
                ("tss_mg_l", w.tss_mg_l),
                ("cdom440_m1", w.cdom440_m1),
                ("chl_ug_l", w.chl_ug_l),
            ] {
                if v < 0.0 {
                    return Err(invalid(&format!("{name}.{field}"), "must be non-negative"));
                }
            }
        }
        if self.river.salinity_psu >= self.sea.salinity_psu {
            return Err(invalid(
                "river.salinity_psu",
                "river salinity must be below sea salinity",
            ));
        }
        for (field, v) in [
            ("nitrate", self.noise.nitrate),
            ("tss", self.noise.tss),
            ("cdom", self.noise.cdom),
            ("chl", self.noise.chl),
            ("salinity", self.noise.salinity),
            ("rrs", self.noise.rrs),
        ] {
            if v < 0.0 {
                return Err(invalid(&format!("noise.{field}"), "must be non-negative"));
            }
        }
        for (field, v) in [
            ("nitrate_cadence_minutes", self.nitrate_cadence_minutes),
            ("salinity_cadence_minutes", self.salinity_cadence_minutes),
            ("scan_cadence_minutes", self.scan_cadence_minutes),
        ] {
            if v <= 0 {
                return Err(invalid(field, "must be positive"));
            }
        }
        if !(0.0..=1.0).contains(&self.mixing_f0) {
            return Err(invalid("mixing_f0", "must be in [0, 1]"));
        }
        if !(0.0..=0.1).contains(&self.skylight_rho) {
            return Err(invalid("skylight_rho", "must be in [0, 0.1]"));
        }
        if self.nitrate_precision_mg_l < 0.0 {
            return Err(invalid("nitrate_precision_mg_l", "must be non-negative"));
        }
        for g in &self.gaps {
            if g.hours < 0.0 || g.start_hours < 0.0 {
                return Err(invalid("gaps", "windows must be non-negative"));
            }
        }
        self.bio.validate()?;
        Ok(())
    }

    /// Hours since campaign start.
    pub fn hours_since_start(&self, t: DateTime<Utc>) -> f64 {
        (t - self.start_utc).num_seconds() as f64 / 3600.0
    }

    pub fn in_gap(&self, t: DateTime<Utc>) -> bool {
        let h = self.hours_since_start(t);
        self.gaps
            .iter()
            .any(|g| h >= g.start_hours && h < g.start_hours + g.hours)
    }
}
