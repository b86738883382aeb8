//! Sensor stream ingestion: parsing, drift calibration, cross-stream pairing,
//! and train/test splitting.

pub mod calibrate;
pub mod io;
pub mod pair;
pub mod split;

pub use calibrate::{drift_calibrate, CalibrationReport};
pub use io::{load_campaign, CampaignPaths, CampaignStreams, LoadReport};
pub use pair::{pair_observations, PairingConfig};
pub use split::{split_train_test, SplitIndex};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}:{row}: {message}")]
    Schema {
        path: String,
        row: u64,
        message: String,
    },
    #[error("{path}: duplicate timestamp {timestamp} with conflicting values")]
    NonMonotonicTimestamps { path: String, timestamp: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("drift calibration needs at least 2 lab samples, got {got}")]
    InsufficientLabSamples { got: usize },
    #[error("lab sample at {timestamp} has no sensor reading within {window_minutes} min")]
    UnmatchableLabSample {
        timestamp: String,
        window_minutes: i64,
    },
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error(transparent)]
    Spectral(#[from] crate::spectral::SpectralError),
}

/// One nitrate sensor reading.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NitrateReading {
    pub timestamp: DateTime<Utc>,
    pub concentration_mg_l: f64,
    pub flag: String,
}

/// One salinity reading (PSU).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SalinityReading {
    pub timestamp: DateTime<Utc>,
    pub salinity_psu: f64,
}

/// One laboratory-analysed water sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabSample {
    pub timestamp: DateTime<Utc>,
    pub nitrate_mg_l: f64,
}

/// A time-aligned predictor/target record: reflectance and salinity on the
/// predictor side, nitrate (and, when the oracle provides them, TSS and CDOM)
/// on the target side. Timestamps are nitrate time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchedSample {
    pub timestamp: DateTime<Utc>,
    pub rrs: Vec<f64>,
    pub salinity_psu: f64,
    pub nitrate_mg_l: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tss_mg_l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cdom440_m1: Option<f64>,
}
