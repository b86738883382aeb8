//! Tidal elevation, tidal mixing fraction, and the conservative two
//! end-member water state.

use super::{EstuaryConfig, TidalConstituent};
use chrono::{DateTime, Utc};
use std::f64::consts::TAU;

/// Harmonic tidal elevation in metres at `hours` since the reference epoch:
/// `eta(t) = sum_k A_k * cos(tau * t / T_k + phi_k)`.
pub fn tidal_elevation(hours: f64, constituents: &[TidalConstituent]) -> f64 {
    constituents
        .iter()
        .map(|c| c.amplitude_m * (TAU * hours / c.period_hours + c.phase_rad).cos())
        .sum()
}

/// Seawater fraction at time `t`: `clamp(f0 + beta * eta / eta_max, 0, 1)`.
/// `eta_max` is the sum of constituent amplitudes; with no constituents the
/// fraction is constantly `f0`.
pub fn mixing_fraction(cfg: &EstuaryConfig, t: DateTime<Utc>) -> f64 {
    let eta_max: f64 = cfg.constituents.iter().map(|c| c.amplitude_m).sum();
    if eta_max <= 0.0 {
        return cfg.mixing_f0.clamp(0.0, 1.0);
    }
    let eta = tidal_elevation(cfg.hours_since_start(t), &cfg.constituents);
    (cfg.mixing_f0 + cfg.mixing_beta * eta / eta_max).clamp(0.0, 1.0)
}

/// Realized water state (optionally noisy) at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaterState {
    pub salinity_psu: f64,
    pub nitrate_mg_l: f64,
    pub tss_mg_l: f64,
    pub cdom440_m1: f64,
    pub chl_ug_l: f64,
}

/// Standard-normal draws for the multiplicative noise of one state sample.
/// Zeros reproduce the noiseless state.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoiseDraws {
    pub nitrate: f64,
    pub tss: f64,
    pub cdom: f64,
    pub chl: f64,
    pub salinity: f64,
}

/// Conservative mixing `X = f * X_sea + (1 - f) * X_river` per variable,
/// then mean-one lognormal noise scaled by the configured relative levels.
pub fn water_state(cfg: &EstuaryConfig, t: DateTime<Utc>, draws: NoiseDraws) -> WaterState {
    let f = mixing_fraction(cfg, t);
    let mix = |river: f64, sea: f64| f * sea + (1.0 - f) * river;

    let mut nitrate = mix(cfg.river.nitrate_mg_l, cfg.sea.nitrate_mg_l);
    if cfg.nitrate_decay_per_day > 0.0 {
        let age_days = cfg.hours_since_start(t).max(0.0) / 24.0;
        nitrate *= (-cfg.nitrate_decay_per_day * age_days.min(1.0)).exp();
    }

    WaterState {
        salinity_psu: lognormal(
            mix(cfg.river.salinity_psu, cfg.sea.salinity_psu),
            cfg.noise.salinity,
            draws.salinity,
        )
        .clamp(0.0, 42.0),
        nitrate_mg_l: lognormal(nitrate, cfg.noise.nitrate, draws.nitrate),
        tss_mg_l: lognormal(mix(cfg.river.tss_mg_l, cfg.sea.tss_mg_l), cfg.noise.tss, draws.tss),
        cdom440_m1: lognormal(
            mix(cfg.river.cdom440_m1, cfg.sea.cdom440_m1),
            cfg.noise.cdom,
            draws.cdom,
        ),
        chl_ug_l: lognormal(mix(cfg.river.chl_ug_l, cfg.sea.chl_ug_l), cfg.noise.chl, draws.chl),
    }
}

/// Mean-one multiplicative lognormal factor applied to `value`.
pub fn lognormal(value: f64, sigma_rel: f64, z: f64) -> f64 {
    if sigma_rel <= 0.0 {
        return value;
    }
    value * (sigma_rel * z - 0.5 * sigma_rel * sigma_rel).exp()
}
