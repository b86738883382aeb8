//! File schemas for sensor streams and matched samples.
//!
//! CSV artifacts carry a `# format=... seed=... created=...` comment line
//! above the column header; JSON-lines artifacts carry a header object on the
//! first line. Readers skip both. Malformed rows are hard errors naming the
//! row; out-of-order rows are sorted and counted, duplicate rows with
//! identical values are dropped and counted.

use super::{IngestError, LabSample, MatchedSample, NitrateReading, SalinityReading};
use crate::grid::WavelengthGrid;
use crate::header::{format_timestamp, FileHeader};
use crate::spectral::{trim_to_grid, LwSource, RadiometricScan};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LoadReport {
    pub path: String,
    pub rows: usize,
    pub out_of_order: usize,
    pub duplicates_dropped: usize,
}

fn io_err(path: &Path, source: std::io::Error) -> IngestError {
    IngestError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn schema_err(path: &Path, row: u64, message: impl Into<String>) -> IngestError {
    IngestError::Schema {
        path: path.display().to_string(),
        row,
        message: message.into(),
    }
}

fn parse_timestamp(path: &Path, row: u64, s: &str) -> Result<DateTime<Utc>, IngestError> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| schema_err(path, row, format!("bad timestamp {s:?}: {e}")))
}

fn parse_f64(path: &Path, row: u64, field: &str, s: &str) -> Result<f64, IngestError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| schema_err(path, row, format!("bad {field}: {s:?}")))
}

/// Sort by timestamp, counting inversions; duplicates with identical payloads
/// are dropped, conflicting duplicates are an error.
fn finalize_stream<T>(
    mut rows: Vec<(DateTime<Utc>, T)>,
    same: impl Fn(&T, &T) -> bool,
    path: &Path,
    report: &mut LoadReport,
) -> Result<Vec<(DateTime<Utc>, T)>, IngestError> {
    for i in 1..rows.len() {
        if rows[i].0 < rows[i - 1].0 {
            report.out_of_order += 1;
        }
    }
    rows.sort_by_key(|r| r.0);
    let mut out: Vec<(DateTime<Utc>, T)> = Vec::with_capacity(rows.len());
    for row in rows {
        if let Some(last) = out.last() {
            if last.0 == row.0 {
                if same(&last.1, &row.1) {
                    report.duplicates_dropped += 1;
                    continue;
                }
                return Err(IngestError::NonMonotonicTimestamps {
                    path: path.display().to_string(),
                    timestamp: format_timestamp(row.0),
                });
            }
        }
        out.push(row);
    }
    Ok(out)
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>, IngestError> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(false)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => io_err(
                path,
                std::io::Error::new(std::io::ErrorKind::NotFound, e.to_string()),
            ),
            _ => schema_err(path, 1, e.to_string()),
        })
}

fn row_line(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

// ---------------------------------------------------------------------------
// scalar stream CSVs
// ---------------------------------------------------------------------------

/// `timestamp_iso8601,nitrate_mg_per_l,flag`
pub fn read_nitrate_csv(path: &Path) -> Result<(Vec<NitrateReading>, LoadReport), IngestError> {
    let mut reader = csv_reader(path)?;
    let mut report = LoadReport {
        path: path.display().to_string(),
        ..LoadReport::default()
    };
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| schema_err(path, 0, e.to_string()))?;
        let line = row_line(&record);
        if record.len() < 2 {
            return Err(schema_err(path, line, "expected at least 2 columns"));
        }
        let timestamp = parse_timestamp(path, line, &record[0])?;
        let concentration = parse_f64(path, line, "nitrate_mg_per_l", &record[1])?;
        if concentration < 0.0 {
            return Err(schema_err(
                path,
                line,
                format!("nitrate must be non-negative, got {concentration}"),
            ));
        }
        let flag = record.get(2).unwrap_or("").to_string();
        rows.push((timestamp, (concentration, flag)));
        report.rows += 1;
    }
    let rows = finalize_stream(rows, |a, b| a == b, path, &mut report)?;
    let readings = rows
        .into_iter()
        .map(|(timestamp, (concentration_mg_l, flag))| NitrateReading {
            timestamp,
            concentration_mg_l,
            flag,
        })
        .collect();
    Ok((readings, report))
}

/// `timestamp_iso8601,salinity_psu`
pub fn read_salinity_csv(path: &Path) -> Result<(Vec<SalinityReading>, LoadReport), IngestError> {
    let mut reader = csv_reader(path)?;
    let mut report = LoadReport {
        path: path.display().to_string(),
        ..LoadReport::default()
    };
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| schema_err(path, 0, e.to_string()))?;
        let line = row_line(&record);
        if record.len() < 2 {
            return Err(schema_err(path, line, "expected 2 columns"));
        }
        let timestamp = parse_timestamp(path, line, &record[0])?;
        let salinity = parse_f64(path, line, "salinity_psu", &record[1])?;
        if !(0.0..=42.0).contains(&salinity) {
            return Err(schema_err(
                path,
                line,
                format!("salinity {salinity} outside [0, 42] PSU"),
            ));
        }
        rows.push((timestamp, salinity));
        report.rows += 1;
    }
    let rows = finalize_stream(rows, |a, b| a == b, path, &mut report)?;
    let readings = rows
        .into_iter()
        .map(|(timestamp, salinity_psu)| SalinityReading {
            timestamp,
            salinity_psu,
        })
        .collect();
    Ok((readings, report))
}

/// `timestamp_iso8601,nitrate_mg_per_l`
pub fn read_lab_csv(path: &Path) -> Result<(Vec<LabSample>, LoadReport), IngestError> {
    let mut reader = csv_reader(path)?;
    let mut report = LoadReport {
        path: path.display().to_string(),
        ..LoadReport::default()
    };
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| schema_err(path, 0, e.to_string()))?;
        let line = row_line(&record);
        if record.len() < 2 {
            return Err(schema_err(path, line, "expected 2 columns"));
        }
        let timestamp = parse_timestamp(path, line, &record[0])?;
        let nitrate = parse_f64(path, line, "nitrate_mg_per_l", &record[1])?;
        if nitrate < 0.0 {
            return Err(schema_err(path, line, "nitrate must be non-negative"));
        }
        rows.push((timestamp, nitrate));
        report.rows += 1;
    }
    let rows = finalize_stream(rows, |a, b| a == b, path, &mut report)?;
    let samples = rows
        .into_iter()
        .map(|(timestamp, nitrate_mg_l)| LabSample {
            timestamp,
            nitrate_mg_l,
        })
        .collect();
    Ok((samples, report))
}

/// Generic `(timestamp, value)` series: first column must be
/// `timestamp_iso8601`, the second column is the value.
pub fn read_series_csv(
    path: &Path,
) -> Result<(Vec<(DateTime<Utc>, f64)>, LoadReport), IngestError> {
    let mut reader = csv_reader(path)?;
    let mut report = LoadReport {
        path: path.display().to_string(),
        ..LoadReport::default()
    };
    let headers = reader
        .headers()
        .map_err(|e| schema_err(path, 1, e.to_string()))?
        .clone();
    if headers.get(0) != Some("timestamp_iso8601") {
        return Err(schema_err(
            path,
            1,
            "first column must be timestamp_iso8601",
        ));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| schema_err(path, 0, e.to_string()))?;
        let line = row_line(&record);
        if record.len() < 2 {
            return Err(schema_err(path, line, "expected 2 columns"));
        }
        let timestamp = parse_timestamp(path, line, &record[0])?;
        let value = parse_f64(path, line, "value", &record[1])?;
        rows.push((timestamp, value));
        report.rows += 1;
    }
    let rows = finalize_stream(rows, |a, b| a == b, path, &mut report)?;
    Ok((rows, report))
}

fn csv_writer(path: &Path) -> Result<BufWriter<fs::File>, IngestError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(path, e))?;
    }
    Ok(BufWriter::new(
        fs::File::create(path).map_err(|e| io_err(path, e))?,
    ))
}

pub fn write_nitrate_csv(
    path: &Path,
    header: &FileHeader,
    readings: &[NitrateReading],
) -> Result<(), IngestError> {
    let mut w = csv_writer(path)?;
    writeln!(w, "{}", header.csv_comment()).map_err(|e| io_err(path, e))?;
    writeln!(w, "timestamp_iso8601,nitrate_mg_per_l,flag").map_err(|e| io_err(path, e))?;
    for r in readings {
        writeln!(
            w,
            "{},{},{}",
            format_timestamp(r.timestamp),
            r.concentration_mg_l,
            r.flag
        )
        .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_salinity_csv(
    path: &Path,
    header: &FileHeader,
    readings: &[SalinityReading],
) -> Result<(), IngestError> {
    let mut w = csv_writer(path)?;
    writeln!(w, "{}", header.csv_comment()).map_err(|e| io_err(path, e))?;
    writeln!(w, "timestamp_iso8601,salinity_psu").map_err(|e| io_err(path, e))?;
    for r in readings {
        writeln!(w, "{},{}", format_timestamp(r.timestamp), r.salinity_psu)
            .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_lab_csv(
    path: &Path,
    header: &FileHeader,
    samples: &[LabSample],
) -> Result<(), IngestError> {
    let mut w = csv_writer(path)?;
    writeln!(w, "{}", header.csv_comment()).map_err(|e| io_err(path, e))?;
    writeln!(w, "timestamp_iso8601,nitrate_mg_per_l").map_err(|e| io_err(path, e))?;
    for s in samples {
        writeln!(w, "{},{}", format_timestamp(s.timestamp), s.nitrate_mg_l)
            .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

// ---------------------------------------------------------------------------
// radiometric scans
// ---------------------------------------------------------------------------

/// JSON-lines record: one scan per line, arrays per channel. `wavelengths_nm`
/// may be omitted when the arrays are already on the shared grid. Either a
/// nadir `lw` or one or more `lw_tilted` arrays must be present.
#[derive(Debug, Serialize, Deserialize)]
pub struct ScanRecord {
    pub timestamp: DateTime<Utc>,
    pub solar_zenith_deg: f64,
    pub view_zenith_deg: f64,
    pub relative_azimuth_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelengths_nm: Option<Vec<f64>>,
    pub ed: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lw: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lw_tilted: Option<Vec<Vec<f64>>>,
    pub lsky: Vec<f64>,
}

impl ScanRecord {
    fn into_scan(self, path: &Path, row: u64, grid: &WavelengthGrid) -> Result<RadiometricScan, IngestError> {
        let (lw_raw, lw_source) = match (&self.lw, &self.lw_tilted) {
            (Some(lw), _) => (lw.clone(), LwSource::Nadir),
            (None, Some(tilted)) if !tilted.is_empty() => {
                let n = tilted[0].len();
                if tilted.iter().any(|t| t.len() != n) {
                    return Err(schema_err(path, row, "tilted radiance arrays differ in length"));
                }
                let mut mean = vec![0.0; n];
                for t in tilted {
                    for (m, v) in mean.iter_mut().zip(t) {
                        *m += v;
                    }
                }
                for m in mean.iter_mut() {
                    *m /= tilted.len() as f64;
                }
                (mean, LwSource::TiltedMean)
            }
            _ => return Err(schema_err(path, row, "scan has neither lw nor lw_tilted")),
        };

        let to_grid = |values: &[f64], channel: &str| -> Result<Vec<f64>, IngestError> {
            match &self.wavelengths_nm {
                Some(nm) => {
                    if nm.len() != values.len() {
                        return Err(schema_err(
                            path,
                            row,
                            format!("{channel} length {} != wavelengths length {}", values.len(), nm.len()),
                        ));
                    }
                    let raw: Vec<(f64, f64)> =
                        nm.iter().copied().zip(values.iter().copied()).collect();
                    trim_to_grid(&raw, grid).map_err(IngestError::Spectral)
                }
                None => {
                    if values.len() != grid.count {
                        return Err(schema_err(
                            path,
                            row,
                            format!("{channel} has {} bands, grid has {}", values.len(), grid.count),
                        ));
                    }
                    Ok(values.to_vec())
                }
            }
        };

        let ed = to_grid(&self.ed, "ed")?;
        let lw = to_grid(&lw_raw, "lw")?;
        let lsky = to_grid(&self.lsky, "lsky")?;
        RadiometricScan::new(
            self.timestamp,
            ed,
            lw,
            lsky,
            self.solar_zenith_deg,
            self.view_zenith_deg,
            self.relative_azimuth_deg,
            lw_source,
        )
        .map_err(IngestError::Spectral)
    }
}

/// Read scans from JSON-lines (`.jsonl`) or long-format CSV (anything else).
pub fn read_scans(
    path: &Path,
    grid: &WavelengthGrid,
) -> Result<(Vec<RadiometricScan>, LoadReport), IngestError> {
    if path.extension().and_then(|e| e.to_str()) == Some("jsonl") {
        read_scans_jsonl(path, grid)
    } else {
        read_scans_csv(path, grid)
    }
}

pub fn read_scans_jsonl(
    path: &Path,
    grid: &WavelengthGrid,
) -> Result<(Vec<RadiometricScan>, LoadReport), IngestError> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut report = LoadReport {
        path: path.display().to_string(),
        ..LoadReport::default()
    };
    let mut rows: Vec<(DateTime<Utc>, RadiometricScan)> = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        let row = i as u64 + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        // header object on the first line
        if trimmed.contains("\"format\"") {
            if serde_json::from_str::<FileHeader>(trimmed).is_ok() {
                continue;
            }
        }
        let record: ScanRecord = serde_json::from_str(trimmed)
            .map_err(|e| schema_err(path, row, e.to_string()))?;
        let scan = record.into_scan(path, row, grid)?;
        rows.push((scan.timestamp, scan));
        report.rows += 1;
    }
    let rows = finalize_stream(
        rows,
        |a, b| a.ed == b.ed && a.lw == b.lw && a.lsky == b.lsky,
        path,
        &mut report,
    )?;
    Ok((rows.into_iter().map(|(_, s)| s).collect(), report))
}

/// Long-format CSV: `timestamp_iso8601,sensor_channel,wavelength_nm,value`.
/// Spectral channels are `ed`, `lw`, `lw_tilted_<i>`, `lsky`; geometry rows
/// use channels `solar_zenith_deg`, `view_zenith_deg`, `relative_azimuth_deg`
/// with an empty wavelength.
pub fn read_scans_csv(
    path: &Path,
    grid: &WavelengthGrid,
) -> Result<(Vec<RadiometricScan>, LoadReport), IngestError> {
    let mut reader = csv_reader(path)?;
    let mut report = LoadReport {
        path: path.display().to_string(),
        ..LoadReport::default()
    };

    #[derive(Default)]
    struct Builder {
        row: u64,
        channels: BTreeMap<String, Vec<(f64, f64)>>,
        angles: BTreeMap<String, f64>,
    }

    let mut builders: BTreeMap<DateTime<Utc>, Builder> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| schema_err(path, 0, e.to_string()))?;
        let line = row_line(&record);
        if record.len() < 4 {
            return Err(schema_err(path, line, "expected 4 columns"));
        }
        let timestamp = parse_timestamp(path, line, &record[0])?;
        let channel = record[1].to_string();
        let value = parse_f64(path, line, "value", &record[3])?;
        let builder = builders.entry(timestamp).or_default();
        builder.row = line;
        match channel.as_str() {
            "solar_zenith_deg" | "view_zenith_deg" | "relative_azimuth_deg" => {
                builder.angles.insert(channel, value);
            }
            _ => {
                let nm = parse_f64(path, line, "wavelength_nm", &record[2])?;
                builder.channels.entry(channel).or_default().push((nm, value));
            }
        }
        report.rows += 1;
    }

    let mut scans = Vec::with_capacity(builders.len());
    for (timestamp, builder) in builders {
        let row = builder.row;
        let angle = |name: &str| -> Result<f64, IngestError> {
            builder
                .angles
                .get(name)
                .copied()
                .ok_or_else(|| schema_err(path, row, format!("scan misses {name}")))
        };
        let channel = |name: &str| -> Result<Vec<f64>, IngestError> {
            let raw = builder
                .channels
                .get(name)
                .ok_or_else(|| schema_err(path, row, format!("scan misses channel {name}")))?;
            trim_to_grid(raw, grid).map_err(IngestError::Spectral)
        };
        let (lw, lw_source) = if builder.channels.contains_key("lw") {
            (channel("lw")?, LwSource::Nadir)
        } else {
            let tilted: Vec<&Vec<(f64, f64)>> = builder
                .channels
                .iter()
                .filter(|(k, _)| k.starts_with("lw_tilted"))
                .map(|(_, v)| v)
                .collect();
            if tilted.is_empty() {
                return Err(schema_err(path, row, "scan misses channel lw"));
            }
            let mut mean = vec![0.0; grid.count];
            for raw in &tilted {
                let trimmed = trim_to_grid(raw, grid).map_err(IngestError::Spectral)?;
                for (m, v) in mean.iter_mut().zip(&trimmed) {
                    *m += v;
                }
            }
            for m in mean.iter_mut() {
                *m /= tilted.len() as f64;
            }
            (mean, LwSource::TiltedMean)
        };
        scans.push(
            RadiometricScan::new(
                timestamp,
                channel("ed")?,
                lw,
                channel("lsky")?,
                angle("solar_zenith_deg")?,
                angle("view_zenith_deg")?,
                angle("relative_azimuth_deg")?,
                lw_source,
            )
            .map_err(IngestError::Spectral)?,
        );
    }
    Ok((scans, report))
}

pub fn write_scans_jsonl(
    path: &Path,
    header: &FileHeader,
    scans: &[RadiometricScan],
) -> Result<(), IngestError> {
    let mut w = csv_writer(path)?;
    writeln!(w, "{}", serde_json::to_string(header).expect("header serializes"))
        .map_err(|e| io_err(path, e))?;
    for scan in scans {
        let record = ScanRecord {
            timestamp: scan.timestamp,
            solar_zenith_deg: scan.solar_zenith_deg,
            view_zenith_deg: scan.view_zenith_deg,
            relative_azimuth_deg: scan.relative_azimuth_deg,
            wavelengths_nm: None,
            ed: scan.ed.clone(),
            lw: Some(scan.lw.clone()),
            lw_tilted: None,
            lsky: scan.lsky.clone(),
        };
        writeln!(w, "{}", serde_json::to_string(&record).expect("scan serializes"))
            .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

// ---------------------------------------------------------------------------
// matched samples
// ---------------------------------------------------------------------------

pub fn write_matched_jsonl(
    path: &Path,
    header: &FileHeader,
    samples: &[MatchedSample],
) -> Result<(), IngestError> {
    let mut w = csv_writer(path)?;
    writeln!(w, "{}", serde_json::to_string(header).expect("header serializes"))
        .map_err(|e| io_err(path, e))?;
    for s in samples {
        writeln!(w, "{}", serde_json::to_string(s).expect("sample serializes"))
            .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_matched_jsonl(
    path: &Path,
    grid: &WavelengthGrid,
) -> Result<Vec<MatchedSample>, IngestError> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        let row = i as u64 + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.contains("\"format\"") && serde_json::from_str::<FileHeader>(trimmed).is_ok() {
            continue;
        }
        let sample: MatchedSample =
            serde_json::from_str(trimmed).map_err(|e| schema_err(path, row, e.to_string()))?;
        if !grid.conforms(&sample.rrs) {
            return Err(schema_err(
                path,
                row,
                format!("rrs has {} bands, grid has {}", sample.rrs.len(), grid.count),
            ));
        }
        out.push(sample);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// whole-campaign convenience loader
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignPaths {
    pub nitrate: PathBuf,
    pub salinity: PathBuf,
    pub lab: PathBuf,
    pub scans: PathBuf,
}

impl CampaignPaths {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            nitrate: dir.join("nitrate.csv"),
            salinity: dir.join("salinity.csv"),
            lab: dir.join("lab.csv"),
            scans: dir.join("scans.jsonl"),
        }
    }
}

pub struct CampaignStreams {
    pub nitrate: Vec<NitrateReading>,
    pub salinity: Vec<SalinityReading>,
    pub labs: Vec<LabSample>,
    pub scans: Vec<RadiometricScan>,
    pub reports: Vec<LoadReport>,
}

/// Parse and time-sort all campaign streams.
pub fn load_campaign(
    paths: &CampaignPaths,
    grid: &WavelengthGrid,
) -> Result<CampaignStreams, IngestError> {
    let (nitrate, r1) = read_nitrate_csv(&paths.nitrate)?;
    let (salinity, r2) = read_salinity_csv(&paths.salinity)?;
    let (labs, r3) = read_lab_csv(&paths.lab)?;
    let (scans, r4) = read_scans(&paths.scans, grid)?;
    Ok(CampaignStreams {
        nitrate,
        salinity,
        labs,
        scans,
        reports: vec![r1, r2, r3, r4],
    })
}
