//! Self-describing model checkpoint with integrity hashing.
//!
//! The file is one JSON object carrying the schedule, encoder, target
//! transform, network weights, training config, and three hashes: the config
//! hash, the hash of the split file it was trained against, and a payload
//! hash over the canonicalized checkpoint itself. Loading re-canonicalizes
//! and rejects any tampering.

use super::train::{TrainedModel, TrainingConfig};
use super::DdpmError;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::Path;

pub const CHECKPOINT_FORMAT: &str = "checkpoint/v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub created_utc: String,
    pub seed: u64,
    pub config: TrainingConfig,
    /// SHA-256 of the canonical JSON of `config`.
    pub config_sha256: String,
    /// SHA-256 of the split file this model was trained with.
    pub split_sha256: String,
    pub model: TrainedModel,
    /// SHA-256 over the canonical JSON of this object with the field blanked.
    pub payload_sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Canonical JSON: `serde_json::Value` serialization, which orders object
/// keys lexicographically.
fn canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("serializable");
    serde_json::to_string(&v).expect("value serializes")
}

fn payload_hash(checkpoint: &Checkpoint) -> String {
    let mut v = serde_json::to_value(checkpoint).expect("checkpoint serializes");
    if let Value::Object(map) = &mut v {
        map.remove("payload_sha256");
    }
    sha256_hex(serde_json::to_string(&v).expect("value serializes").as_bytes())
}

impl Checkpoint {
    pub fn new(
        model: TrainedModel,
        seed: u64,
        split_sha256: String,
        fixed_timestamp: bool,
    ) -> Self {
        let config = model.config.clone();
        let mut checkpoint = Self {
            format: CHECKPOINT_FORMAT.to_string(),
            created_utc: if fixed_timestamp {
                crate::header::FIXED_TIMESTAMP.to_string()
            } else {
                crate::header::now_rfc3339()
            },
            seed,
            config_sha256: sha256_hex(canonical_json(&config).as_bytes()),
            config,
            split_sha256,
            model,
            payload_sha256: String::new(),
        };
        checkpoint.payload_sha256 = payload_hash(&checkpoint);
        checkpoint
    }
}

pub fn save_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<(), DdpmError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| DdpmError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
    }
    let body = serde_json::to_string(checkpoint).expect("checkpoint serializes");
    fs::write(path, body).map_err(|e| DdpmError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Load and verify. Any edit to the stored bytes that changes the payload
/// fails the hash comparison.
pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, DdpmError> {
    let body = fs::read_to_string(path).map_err(|e| DdpmError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let checkpoint: Checkpoint = serde_json::from_str(&body)
        .map_err(|e| DdpmError::Integrity(format!("unreadable checkpoint: {e}")))?;
    if checkpoint.format != CHECKPOINT_FORMAT {
        return Err(DdpmError::Integrity(format!(
            "unsupported format {:?}, expected {CHECKPOINT_FORMAT:?}",
            checkpoint.format
        )));
    }
    let expected = payload_hash(&checkpoint);
    if expected != checkpoint.payload_sha256 {
        return Err(DdpmError::Integrity(
            "payload hash mismatch: checkpoint was modified".to_string(),
        ));
    }
    let config_hash = sha256_hex(canonical_json(&checkpoint.config).as_bytes());
    if config_hash != checkpoint.config_sha256 {
        return Err(DdpmError::Integrity(
            "config hash mismatch: checkpoint was modified".to_string(),
        ));
    }
    Ok(checkpoint)
}
