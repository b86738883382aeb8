//! Cross-stream pairing: each nitrate reading is matched to the nearest
//! QC-accepted spectrum and the nearest salinity reading within the window.
//!
//! Spectra are consumed at most once. Candidate (nitrate, spectrum) pairs are
//! ranked globally by time distance — ties broken toward earlier timestamps —
//! and assigned greedily, so the result is deterministic for sorted inputs.

use super::{MatchedSample, NitrateReading, SalinityReading};
use crate::spectral::ReflectanceSpectrum;
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct PairingConfig {
    pub window_minutes: i64,
}

impl Default for PairingConfig {
    fn default() -> Self {
        Self { window_minutes: 5 }
    }
}

/// Optional oracle-known constituents keyed by timestamp, used to fill the
/// TSS/CDOM target slots when a truth stream is available.
pub type OracleTargets = BTreeMap<DateTime<Utc>, (f64, f64)>;

pub fn pair_observations(
    spectra: &[ReflectanceSpectrum],
    nitrate: &[NitrateReading],
    salinity: &[SalinityReading],
    config: PairingConfig,
    oracle: Option<&OracleTargets>,
) -> Vec<MatchedSample> {
    let window = config.window_minutes * 60;

    // All spectrum candidates within the window of each nitrate reading.
    let mut candidates: Vec<(i64, DateTime<Utc>, usize, usize)> = Vec::new();
    let spec_times: Vec<DateTime<Utc>> = spectra.iter().map(|s| s.timestamp).collect();
    for (ni, reading) in nitrate.iter().enumerate() {
        let from = lower_bound(&spec_times, reading.timestamp - chrono::Duration::seconds(window));
        for (si, st) in spec_times.iter().enumerate().skip(from) {
            let dist = (*st - reading.timestamp).num_seconds();
            if dist > window {
                break;
            }
            if dist.abs() <= window {
                candidates.push((dist.abs(), *st, ni, si));
            }
        }
    }
    // Ascending distance; ties fall to the earlier spectrum, then earlier reading.
    candidates.sort_by_key(|&(dist, st, ni, _)| (dist, st, nitrate[ni].timestamp));

    let mut spectrum_taken = vec![false; spectra.len()];
    let mut match_for_reading: Vec<Option<usize>> = vec![None; nitrate.len()];
    for &(_, _, ni, si) in &candidates {
        if match_for_reading[ni].is_none() && !spectrum_taken[si] {
            match_for_reading[ni] = Some(si);
            spectrum_taken[si] = true;
        }
    }

    let sal_times: Vec<DateTime<Utc>> = salinity.iter().map(|s| s.timestamp).collect();
    let mut out = Vec::new();
    for (ni, reading) in nitrate.iter().enumerate() {
        let Some(si) = match_for_reading[ni] else {
            continue;
        };
        let Some(sal) = nearest_within(&sal_times, reading.timestamp, window) else {
            continue;
        };
        let (tss, cdom) = oracle
            .and_then(|o| o.get(&reading.timestamp).copied())
            .map_or((None, None), |(t, c)| (Some(t), Some(c)));
        out.push(MatchedSample {
            timestamp: reading.timestamp,
            rrs: spectra[si].rrs.clone(),
            salinity_psu: salinity[sal].salinity_psu,
            nitrate_mg_l: reading.concentration_mg_l,
            tss_mg_l: tss,
            cdom440_m1: cdom,
        });
    }
    out
}

fn lower_bound(times: &[DateTime<Utc>], t: DateTime<Utc>) -> usize {
    times.partition_point(|&x| x < t)
}

/// Index of the nearest timestamp within `window` seconds; ties to earlier.
fn nearest_within(times: &[DateTime<Utc>], t: DateTime<Utc>, window: i64) -> Option<usize> {
    if times.is_empty() {
        return None;
    }
    let at_or_after = lower_bound(times, t);
    let mut best: Option<(i64, usize)> = None;
    // the earlier neighbour wins ties, so consider it first
    if at_or_after > 0 {
        let i = at_or_after - 1;
        best = Some(((t - times[i]).num_seconds(), i));
    }
    if at_or_after < times.len() {
        let dist = (times[at_or_after] - t).num_seconds();
        if best.is_none_or(|(d, _)| dist < d) {
            best = Some((dist, at_or_after));
        }
    }
    best.filter(|&(d, _)| d <= window).map(|(_, i)| i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn at(h: u32, m: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 1, 1, h, m, 0).unwrap()
    }

    fn spectrum(t: DateTime<Utc>, level: f64) -> ReflectanceSpectrum {
        ReflectanceSpectrum {
            timestamp: t,
            rrs: vec![level; 4],
            qc: None,
        }
    }

    fn reading(t: DateTime<Utc>, v: f64) -> NitrateReading {
        NitrateReading {
            timestamp: t,
            concentration_mg_l: v,
            flag: "ok".into(),
        }
    }

    fn sal(t: DateTime<Utc>, v: f64) -> SalinityReading {
        SalinityReading {
            timestamp: t,
            salinity_psu: v,
        }
    }

    #[test]
    fn nearest_spectrum_within_window_wins() {
        let spectra = vec![spectrum(at(10, 4), 1.0), spectrum(at(10, 7), 2.0)];
        let nitrate = vec![reading(at(10, 0), 0.1)];
        let salinity = vec![sal(at(10, 0), 20.0)];
        let matched =
            pair_observations(&spectra, &nitrate, &salinity, PairingConfig::default(), None);
        assert_eq!(matched.len(), 1);
        assert_eq!(matched[0].rrs[0], 1.0);
        assert_eq!(matched[0].timestamp, at(10, 0));
    }

    #[test]
    fn outside_window_is_unmatched() {
        let spectra = vec![spectrum(at(10, 6), 1.0)];
        let nitrate = vec![reading(at(10, 0), 0.1)];
        let salinity = vec![sal(at(10, 0), 20.0)];
        let matched =
            pair_observations(&spectra, &nitrate, &salinity, PairingConfig::default(), None);
        assert!(matched.is_empty());
    }

    #[test]
    fn equidistant_tie_goes_to_earlier_spectrum() {
        let spectra = vec![spectrum(at(9, 57), 1.0), spectrum(at(10, 3), 2.0)];
        let nitrate = vec![reading(at(10, 0), 0.1)];
        let salinity = vec![sal(at(10, 1), 20.0)];
        let matched =
            pair_observations(&spectra, &nitrate, &salinity, PairingConfig::default(), None);
        assert_eq!(matched.len(), 1);
        assert_eq!(matched[0].rrs[0], 1.0);
    }

    #[test]
    fn spectra_are_used_at_most_once() {
        // one spectrum, two readings: the closer reading takes it
        let spectra = vec![spectrum(at(10, 2), 1.0)];
        let nitrate = vec![reading(at(10, 0), 0.1), reading(at(10, 3), 0.2)];
        let salinity = vec![sal(at(10, 0), 20.0), sal(at(10, 3), 21.0)];
        let matched =
            pair_observations(&spectra, &nitrate, &salinity, PairingConfig::default(), None);
        assert_eq!(matched.len(), 1);
        assert_eq!(matched[0].nitrate_mg_l, 0.2);
    }

    #[test]
    fn missing_salinity_drops_the_sample() {
        let spectra = vec![spectrum(at(10, 0), 1.0)];
        let nitrate = vec![reading(at(10, 0), 0.1)];
        let salinity = vec![sal(at(11, 0), 20.0)];
        let matched =
            pair_observations(&spectra, &nitrate, &salinity, PairingConfig::default(), None);
        assert!(matched.is_empty());
    }

    #[test]
    fn oracle_targets_fill_optional_fields() {
        let spectra = vec![spectrum(at(10, 0), 1.0)];
        let nitrate = vec![reading(at(10, 0), 0.1)];
        let salinity = vec![sal(at(10, 0), 20.0)];
        let mut oracle = OracleTargets::new();
        oracle.insert(at(10, 0), (12.0, 0.8));
        let matched = pair_observations(
            &spectra,
            &nitrate,
            &salinity,
            PairingConfig::default(),
            Some(&oracle),
        );
        assert_eq!(matched[0].tss_mg_l, Some(12.0));
        assert_eq!(matched[0].cdom440_m1, Some(0.8));
    }

    #[test]
    fn pairing_window_is_inclusive() {
        let spectra = vec![spectrum(at(10, 5), 1.0)];
        let nitrate = vec![reading(at(10, 0), 0.1)];
        let salinity = vec![sal(at(10, 5), 20.0)];
        let matched =
            pair_observations(&spectra, &nitrate, &salinity, PairingConfig::default(), None);
        assert_eq!(matched.len(), 1);
    }

    #[test]
    fn rerun_is_deterministic() {
        let spectra: Vec<_> = (0..40).map(|i| spectrum(at(9, i), i as f64)).collect();
        let nitrate: Vec<_> = (0..60)
            .filter(|i| i % 2 == 0)
            .map(|i| reading(at(9, i), 0.1))
            .collect();
        let salinity: Vec<_> = (0..60).map(|i| sal(at(9, i), 20.0)).collect();
        let a = pair_observations(&spectra, &nitrate, &salinity, PairingConfig::default(), None);
        let b = pair_observations(&spectra, &nitrate, &salinity, PairingConfig::default(), None);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.timestamp, y.timestamp);
            assert_eq!(x.rrs, y.rrs);
        }
    }
}
