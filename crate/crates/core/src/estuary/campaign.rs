//! Campaign generation: emit nitrate/salinity/lab CSVs, radiometric scan
//! records, and a noiseless truth stream, all consistent with one simulated
//! estuary so the full pipeline round-trips.
//!
//! Scans are synthesized by inverting the reflectance equation with smooth
//! analytic daylight irradiance and skylight models, so the preprocessing
//! stage recovers the emitted reflectance exactly when noise is off.

use super::tide::{lognormal, water_state, NoiseDraws};
use super::{forward_rrs, ConfigError, EstuaryConfig};
use crate::grid::WavelengthGrid;
use crate::header::FileHeader;
use crate::ingest::io::{
    write_lab_csv, write_nitrate_csv, write_salinity_csv, write_scans_jsonl,
};
use crate::ingest::{LabSample, NitrateReading, SalinityReading};
use crate::seed::rng_for;
use crate::spectral::{LwSource, RadiometricScan};
use chrono::{DateTime, Duration, Utc};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

/// Fixed observation geometry of the simulated instrument.
const VIEW_ZENITH_DEG: f64 = 40.0;
const RELATIVE_AZIMUTH_DEG: f64 = 135.0;
/// Irradiance floor so night scans stay computable (they are QC-rejected).
const NIGHT_IRRADIANCE_FACTOR: f64 = 1e-4;

/// Noiseless state snapshot used for oracle comparisons. `rrs` is present
/// for records at scan timestamps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthRecord {
    pub timestamp: DateTime<Utc>,
    pub salinity_psu: f64,
    pub nitrate_mg_l: f64,
    pub tss_mg_l: f64,
    pub cdom440_m1: f64,
    pub chl_ug_l: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rrs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignFiles {
    pub nitrate: PathBuf,
    pub salinity: PathBuf,
    pub lab: PathBuf,
    pub scans: PathBuf,
    pub truth: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub nitrate_rows: usize,
    pub salinity_rows: usize,
    pub lab_rows: usize,
    pub scan_rows: usize,
    pub truth_rows: usize,
    pub files: CampaignFiles,
}

/// Solar zenith angle (degrees) from the fractional UTC hour: a simple
/// 12-hour daylight arc peaking at 90 deg elevation at local noon.
pub fn solar_zenith_deg(t: DateTime<Utc>) -> f64 {
    let seconds = t.timestamp().rem_euclid(86_400) as f64;
    let hour = seconds / 3600.0;
    let elevation = if (6.0..=18.0).contains(&hour) {
        90.0 * (std::f64::consts::PI * (hour - 6.0) / 12.0).sin()
    } else {
        -10.0
    };
    (90.0 - elevation).clamp(0.0, 90.0)
}

/// Smooth analytic daylight irradiance spectrum (W m^-2 nm^-1).
pub fn irradiance(nm: f64, sza_deg: f64) -> f64 {
    let top = 1.6 * (-((nm - 480.0) / 220.0).powi(2)).exp();
    let cos_sza = (sza_deg.to_radians()).cos().max(NIGHT_IRRADIANCE_FACTOR);
    top * cos_sza
}

/// Diffuse skylight radiance model (W m^-2 sr^-1 nm^-1), bluer than the sun.
pub fn skylight(nm: f64, sza_deg: f64) -> f64 {
    0.25 * irradiance(nm, sza_deg) / std::f64::consts::PI * (550.0 / nm).powf(1.3)
}

fn draw(rng: &mut crate::seed::Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Generate all campaign files under `out_dir`. Deterministic for a given
/// config: identical configs produce byte-identical outputs.
pub fn generate_campaign(
    config: &EstuaryConfig,
    grid: &WavelengthGrid,
    out_dir: &Path,
    fixed_timestamp: bool,
) -> Result<CampaignSummary, CampaignError> {
    config.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| CampaignError::Io(out_dir.display().to_string(), e))?;

    let end = config.start_utc
        + Duration::seconds((config.days * 86_400.0).round() as i64);
    let mut truth: BTreeMap<DateTime<Utc>, TruthRecord> = BTreeMap::new();
    let noiseless = |t: DateTime<Utc>| {
        let mut cfg = config.clone();
        cfg.noise = super::NoiseLevels::off();
        water_state(&cfg, t, NoiseDraws::default())
    };

    // --- nitrate sensor stream -------------------------------------------
    let mut nitrate_rng = rng_for(config.seed, "sim/nitrate-noise");
    let mut nitrate = Vec::new();
    let mut t = config.start_utc;
    while t < end {
        let z = draw(&mut nitrate_rng);
        if !config.in_gap(t) {
            let clean = noiseless(t);
            let realized = lognormal(clean.nitrate_mg_l, config.noise.nitrate, z);
            let mut reading =
                config.sensor_drift_gain * realized + config.sensor_drift_offset_mg_l;
            if config.nitrate_precision_mg_l > 0.0 {
                reading = (reading / config.nitrate_precision_mg_l).round()
                    * config.nitrate_precision_mg_l;
            }
            nitrate.push(NitrateReading {
                timestamp: t,
                concentration_mg_l: reading.max(0.0),
                flag: "ok".to_string(),
            });
            truth.entry(t).or_insert_with(|| {
                let s = noiseless(t);
                TruthRecord {
                    timestamp: t,
                    salinity_psu: s.salinity_psu,
                    nitrate_mg_l: s.nitrate_mg_l,
                    tss_mg_l: s.tss_mg_l,
                    cdom440_m1: s.cdom440_m1,
                    chl_ug_l: s.chl_ug_l,
                    rrs: None,
                }
            });
        }
        t += Duration::minutes(config.nitrate_cadence_minutes);
    }

    // --- salinity stream ---------------------------------------------------
    let mut salinity_rng = rng_for(config.seed, "sim/salinity-noise");
    let mut salinity = Vec::new();
    let mut t = config.start_utc;
    while t < end {
        let z = draw(&mut salinity_rng);
        if !config.in_gap(t) {
            let clean = noiseless(t);
            salinity.push(SalinityReading {
                timestamp: t,
                salinity_psu: lognormal(clean.salinity_psu, config.noise.salinity, z)
                    .clamp(0.0, 42.0),
            });
        }
        t += Duration::minutes(config.salinity_cadence_minutes);
    }

    // --- radiometric scans --------------------------------------------------
    let mut state_rng = rng_for(config.seed, "sim/state-noise");
    let mut rrs_rng = rng_for(config.seed, "sim/rrs-noise");
    let mut scans = Vec::new();
    let mut t = config.start_utc;
    while t < end {
        let draws = NoiseDraws {
            nitrate: draw(&mut state_rng),
            tss: draw(&mut state_rng),
            cdom: draw(&mut state_rng),
            chl: draw(&mut state_rng),
            salinity: draw(&mut state_rng),
        };
        let band_noise: Vec<f64> = (0..grid.count).map(|_| draw(&mut rrs_rng)).collect();
        if !config.in_gap(t) {
            let realized = water_state(config, t, draws);
            let rrs_water = forward_rrs(
                realized.tss_mg_l,
                realized.cdom440_m1,
                realized.chl_ug_l,
                &config.bio,
                grid,
            );
            let sza = solar_zenith_deg(t);
            let mut ed = Vec::with_capacity(grid.count);
            let mut lw = Vec::with_capacity(grid.count);
            let mut lsky = Vec::with_capacity(grid.count);
            for (band, nm) in grid.wavelengths().enumerate() {
                let rrs_obs = lognormal(rrs_water[band], config.noise.rrs, band_noise[band]);
                let e = irradiance(nm, sza);
                let s = skylight(nm, sza);
                ed.push(e);
                lsky.push(s);
                lw.push(rrs_obs * e + config.skylight_rho * s);
            }
            scans.push(
                RadiometricScan::new(
                    t,
                    ed,
                    lw,
                    lsky,
                    sza,
                    VIEW_ZENITH_DEG,
                    RELATIVE_AZIMUTH_DEG,
                    LwSource::Nadir,
                )
                .expect("synthesized scan is valid"),
            );
            let clean = noiseless(t);
            let clean_rrs = forward_rrs(
                clean.tss_mg_l,
                clean.cdom440_m1,
                clean.chl_ug_l,
                &config.bio,
                grid,
            );
            truth
                .entry(t)
                .and_modify(|r| r.rrs = Some(clean_rrs.clone()))
                .or_insert_with(|| TruthRecord {
                    timestamp: t,
                    salinity_psu: clean.salinity_psu,
                    nitrate_mg_l: clean.nitrate_mg_l,
                    tss_mg_l: clean.tss_mg_l,
                    cdom440_m1: clean.cdom440_m1,
                    chl_ug_l: clean.chl_ug_l,
                    rrs: Some(clean_rrs),
                });
        }
        t += Duration::minutes(config.scan_cadence_minutes);
    }

    // --- lab reference samples ----------------------------------------------
    let mut lab_rng = rng_for(config.seed, "sim/lab-times");
    let mut lab_noise_rng = rng_for(config.seed, "sim/lab-noise");
    let total_minutes = (config.days * 24.0 * 60.0) as i64;
    let mut lab_times: Vec<DateTime<Utc>> = Vec::new();
    let mut guard = 0;
    while lab_times.len() < config.lab_sample_count && guard < 100_000 {
        guard += 1;
        let minute = lab_rng.random_range(0..total_minutes.max(1));
        let t = config.start_utc + Duration::minutes(minute);
        if !config.in_gap(t) && !lab_times.contains(&t) {
            lab_times.push(t);
        }
    }
    lab_times.sort_unstable();
    let labs: Vec<LabSample> = lab_times
        .into_iter()
        .map(|t| {
            let z = draw(&mut lab_noise_rng);
            LabSample {
                timestamp: t,
                nitrate_mg_l: lognormal(noiseless(t).nitrate_mg_l, config.lab_noise_rel, z),
            }
        })
        .collect();

    // --- write everything -----------------------------------------------------
    let files = CampaignFiles {
        nitrate: out_dir.join("nitrate.csv"),
        salinity: out_dir.join("salinity.csv"),
        lab: out_dir.join("lab.csv"),
        scans: out_dir.join("scans.jsonl"),
        truth: out_dir.join("truth.jsonl"),
    };
    let header = |format: &str| FileHeader::new(format, config.seed, fixed_timestamp);
    write_nitrate_csv(&files.nitrate, &header("nitrate/v1"), &nitrate)?;
    write_salinity_csv(&files.salinity, &header("salinity/v1"), &salinity)?;
    write_lab_csv(&files.lab, &header("lab/v1"), &labs)?;
    write_scans_jsonl(&files.scans, &header("scans/v1"), &scans)?;
    write_truth_jsonl(&files.truth, &header("truth/v1"), truth.values())?;

    Ok(CampaignSummary {
        nitrate_rows: nitrate.len(),
        salinity_rows: salinity.len(),
        lab_rows: labs.len(),
        scan_rows: scans.len(),
        truth_rows: truth.len(),
        files,
    })
}

pub fn write_truth_jsonl<'a>(
    path: &Path,
    header: &FileHeader,
    records: impl Iterator<Item = &'a TruthRecord>,
) -> Result<(), CampaignError> {
    let file = fs::File::create(path)
        .map_err(|e| CampaignError::Io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{}", serde_json::to_string(header).expect("header serializes"))
        .map_err(|e| CampaignError::Io(path.display().to_string(), e))?;
    for record in records {
        writeln!(w, "{}", serde_json::to_string(record).expect("truth serializes"))
            .map_err(|e| CampaignError::Io(path.display().to_string(), e))?;
    }
    w.flush()
        .map_err(|e| CampaignError::Io(path.display().to_string(), e))
}

pub fn read_truth_jsonl(path: &Path) -> Result<Vec<TruthRecord>, CampaignError> {
    let file =
        fs::File::open(path).map_err(|e| CampaignError::Io(path.display().to_string(), e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CampaignError::Io(path.display().to_string(), e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.contains("\"format\"")
            && serde_json::from_str::<FileHeader>(trimmed).is_ok()
        {
            continue;
        }
        let record: TruthRecord = serde_json::from_str(trimmed).map_err(|e| {
            CampaignError::Parse(path.display().to_string(), i + 1, e.to_string())
        })?;
        out.push(record);
    }
    Ok(out)
}

#[derive(Debug, thiserror::Error)]
pub enum CampaignError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("{0}:{1}: {2}")]
    Parse(String, usize, String),
    #[error(transparent)]
    Ingest(#[from] crate::ingest::IngestError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estuary::NoiseLevels;
    use crate::ingest::io::{load_campaign, CampaignPaths};

    fn one_day_config() -> EstuaryConfig {
        EstuaryConfig {
            days: 1.0,
            ..EstuaryConfig::default()
        }
    }

    #[test]
    fn one_day_defaults_produce_expected_row_counts() {
        let dir = tempfile::tempdir().unwrap();
        let grid = WavelengthGrid::standard();
        let summary =
            generate_campaign(&one_day_config(), &grid, dir.path(), true).unwrap();
        assert_eq!(summary.nitrate_rows, 144);
        assert_eq!(summary.scan_rows, 96);
        assert_eq!(summary.lab_rows, 12);
        assert_eq!(summary.salinity_rows, 144);
    }

    #[test]
    fn same_seed_is_byte_identical() {
        let grid = WavelengthGrid::standard();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let cfg = EstuaryConfig {
            days: 0.5,
            ..EstuaryConfig::default()
        };
        let s1 = generate_campaign(&cfg, &grid, d1.path(), true).unwrap();
        let s2 = generate_campaign(&cfg, &grid, d2.path(), true).unwrap();
        for (a, b) in [
            (&s1.files.nitrate, &s2.files.nitrate),
            (&s1.files.salinity, &s2.files.salinity),
            (&s1.files.lab, &s2.files.lab),
            (&s1.files.scans, &s2.files.scans),
            (&s1.files.truth, &s2.files.truth),
        ] {
            let bytes_a = std::fs::read(a).unwrap();
            let bytes_b = std::fs::read(b).unwrap();
            assert_eq!(bytes_a, bytes_b, "{} differs", a.display());
        }
    }

    #[test]
    fn generated_files_reparse_without_schema_errors() {
        let dir = tempfile::tempdir().unwrap();
        let grid = WavelengthGrid::standard();
        let summary = generate_campaign(&one_day_config(), &grid, dir.path(), true).unwrap();
        let streams = load_campaign(&CampaignPaths::in_dir(dir.path()), &grid).unwrap();
        assert_eq!(streams.nitrate.len(), summary.nitrate_rows);
        assert_eq!(streams.scans.len(), summary.scan_rows);
        assert_eq!(streams.labs.len(), summary.lab_rows);
        for report in &streams.reports {
            assert_eq!(report.out_of_order, 0);
            assert_eq!(report.duplicates_dropped, 0);
        }
        let truth = read_truth_jsonl(&summary.files.truth).unwrap();
        assert_eq!(truth.len(), summary.truth_rows);
    }

    #[test]
    fn gaps_remove_rows() {
        let dir = tempfile::tempdir().unwrap();
        let grid = WavelengthGrid::standard();
        let cfg = EstuaryConfig {
            days: 1.0,
            gaps: vec![crate::estuary::GapWindow {
                start_hours: 6.0,
                hours: 6.0,
            }],
            ..EstuaryConfig::default()
        };
        let summary = generate_campaign(&cfg, &grid, dir.path(), true).unwrap();
        assert_eq!(summary.nitrate_rows, 144 - 36);
        assert_eq!(summary.scan_rows, 96 - 24);
    }

    #[test]
    fn noise_off_round_trips_through_reflectance_computation() {
        let dir = tempfile::tempdir().unwrap();
        let grid = WavelengthGrid::standard();
        let cfg = EstuaryConfig {
            days: 0.25,
            noise: NoiseLevels::off(),
            start_utc: chrono::TimeZone::with_ymd_and_hms(&Utc, 2024, 1, 1, 8, 0, 0).unwrap(),
            gaps: vec![],
            ..EstuaryConfig::default()
        };
        let summary = generate_campaign(&cfg, &grid, dir.path(), true).unwrap();
        let streams = load_campaign(&CampaignPaths::in_dir(dir.path()), &grid).unwrap();
        let truth = read_truth_jsonl(&summary.files.truth).unwrap();
        let truth_by_ts: BTreeMap<_, _> = truth
            .iter()
            .filter_map(|r| r.rrs.as_ref().map(|rrs| (r.timestamp, rrs)))
            .collect();
        let lut = crate::spectral::BrdfLut::identity(&grid);
        let mut checked = 0;
        for scan in &streams.scans {
            let spec = crate::spectral::compute_brf(scan, cfg.skylight_rho, &grid).unwrap();
            let spec = crate::spectral::brdf_normalize(&spec, scan.geometry(), &lut).unwrap();
            let expected = truth_by_ts[&scan.timestamp];
            for (a, b) in spec.rrs.iter().zip(expected.iter()) {
                assert!(
                    (a - b).abs() < 1e-10,
                    "round-trip error {} at {}",
                    (a - b).abs(),
                    scan.timestamp
                );
            }
            checked += 1;
        }
        assert!(checked > 0);
    }

    #[test]
    fn night_solar_zenith_is_ninety() {
        let midnight = chrono::TimeZone::with_ymd_and_hms(&Utc, 2024, 1, 1, 0, 0, 0).unwrap();
        let noon = chrono::TimeZone::with_ymd_and_hms(&Utc, 2024, 1, 1, 12, 0, 0).unwrap();
        assert_eq!(solar_zenith_deg(midnight), 90.0);
        assert!(solar_zenith_deg(noon) < 1e-9);
    }
}
