//! Run manifests: everything needed to reproduce an output byte for byte.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use mmfsec::ChannelMatrix;
use serde::Serialize;

use crate::CliError;

/// Emitted by every subcommand, to `--manifest PATH` or stderr.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    /// FNV-1a (64-bit) over the channel's canonical JSON bytes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel_digest: Option<String>,
    pub config: serde_json::Value,
    pub unix_time_s: u64,
    pub timestamp_utc: String,
}

impl RunManifest {
    pub fn new(command: &'static str) -> Self {
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            tool: "mmfsec",
            version: env!("CARGO_PKG_VERSION"),
            command,
            master_seed: None,
            channel_digest: None,
            config: serde_json::Value::Null,
            unix_time_s: now,
            timestamp_utc: iso8601_utc(now),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = Some(seed);
        self
    }

    pub fn with_channel(mut self, channel: &ChannelMatrix) -> Self {
        self.channel_digest = Some(format_digest(channel.digest()));
        self
    }

    pub fn with_config(mut self, config: serde_json::Value) -> Self {
        self.config = config;
        self
    }

    pub fn emit(&self, path: Option<&Path>) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serialization");
        match path {
            Some(p) => std::fs::write(p, text + "\n")
                .map_err(|e| CliError { message: format!("{}: {e}", p.display()), code: crate::EXIT_IO }),
            None => {
                eprintln!("{text}");
                Ok(())
            }
        }
    }
}

pub fn format_digest(digest: u64) -> String {
    format!("fnv1a64:{digest:016x}")
}

/// Civil-calendar conversion of a Unix timestamp, UTC.
fn iso8601_utc(secs: u64) -> String {
    let days = secs / 86_400;
    let rem = secs % 86_400;
    let (h, m, s) = (rem / 3600, (rem % 3600) / 60, rem % 60);
    // Days-to-civil (Gregorian), shifting the epoch to 0000-03-01.
    let z = days as i64 + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let month = if mp < 10 { mp + 3 } else { mp - 9 };
    let year = if month <= 2 { y + 1 } else { y };
    format!("{year:04}-{month:02}-{d:02}T{h:02}:{m:02}:{s:02}Z")
}
