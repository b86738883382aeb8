//! Output-file headers: every artifact records the seed that produced it and
//! a creation timestamp (frozen to the epoch in fixed-timestamp mode so that
//! reruns are byte-identical).

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

pub const FIXED_TIMESTAMP: &str = "1970-01-01T00:00:00Z";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileHeader {
    pub format: String,
    pub seed: u64,
    pub created_utc: String,
}

impl FileHeader {
    pub fn new(format: &str, seed: u64, fixed_timestamp: bool) -> Self {
        Self {
            format: format.to_string(),
            seed,
            created_utc: if fixed_timestamp {
                FIXED_TIMESTAMP.to_string()
            } else {
                now_rfc3339()
            },
        }
    }

    /// Comment line placed above the column header of CSV artifacts.
    pub fn csv_comment(&self) -> String {
        format!(
            "# format={} seed={} created={}",
            self.format, self.seed, self.created_utc
        )
    }
}

pub fn now_rfc3339() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true)
}

pub fn format_timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}
