//! Report serialization, the versioned report schema check, and the run
//! manifest.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::eval::{EvaluationReport, REPORT_SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::mapping::hex_string;

/// Pretty JSON rendering of a report (deterministic: all maps are ordered).
pub fn render_report(report: &EvaluationReport) -> Result<String> {
    let value = serde_json::to_value(report).map_err(|e| Error::Config(e.to_string()))?;
    validate_report(&value)?;
    serde_json::to_string_pretty(&value).map_err(|e| Error::Config(e.to_string()))
}

fn require<'a>(value: &'a Value, field: &str) -> Result<&'a Value> {
    value.get(field).ok_or_else(|| {
        Error::InvalidValue {
            what: "evaluation report",
            msg: format!("missing field '{field}'"),
        }
    })
}

/// Structural check of a serialized report against the versioned schema:
/// required fields, per-dimension blocks, and 5-entry quintile arrays.
pub fn validate_report(value: &Value) -> Result<()> {
    let version = require(value, "schema_version")?.as_u64().unwrap_or(0);
    if version != REPORT_SCHEMA_VERSION as u64 {
        return Err(Error::InvalidValue {
            what: "evaluation report",
            msg: format!("schema_version {version}, expected {REPORT_SCHEMA_VERSION}"),
        });
    }
    for field in ["run_id", "config_digest"] {
        if !require(value, field)?.is_string() {
            return Err(Error::InvalidValue {
                what: "evaluation report",
                msg: format!("field '{field}' must be a string"),
            });
        }
    }
    let partitions = require(value, "partitions")?
        .as_object()
        .ok_or_else(|| Error::InvalidValue {
            what: "evaluation report",
            msg: "'partitions' must be an object".into(),
        })?;
    for (name, block) in partitions {
        for dim in ["valence", "arousal"] {
            let d = block.get(dim).ok_or_else(|| Error::InvalidValue {
                what: "evaluation report",
                msg: format!("partition '{name}' missing dimension '{dim}'"),
            })?;
            for stat in ["overall_ccc", "story_ccc_mean", "story_ccc_std", "per_story_ccc", "author_ccc"] {
                require(d, stat)?;
            }
        }
    }
    let quintiles = require(value, "quintiles")?
        .as_object()
        .ok_or_else(|| Error::InvalidValue {
            what: "evaluation report",
            msg: "'quintiles' must be an object".into(),
        })?;
    for dim in ["valence", "arousal"] {
        let arr = quintiles
            .get(dim)
            .and_then(|v| v.as_array())
            .ok_or_else(|| Error::InvalidValue {
                what: "evaluation report",
                msg: format!("quintiles missing array for '{dim}'"),
            })?;
        if arr.len() != 5 {
            return Err(Error::InvalidValue {
                what: "evaluation report",
                msg: format!("quintiles for '{dim}' must have 5 entries, got {}", arr.len()),
            });
        }
    }
    let errors = require(value, "error_stats")?;
    for dim in ["valence", "arousal"] {
        let block = require(errors, dim)?;
        for stat in ["mean", "std", "median", "p90", "p95", "n"] {
            require(block, stat)?;
        }
    }
    Ok(())
}

/// One stage's record in the run manifest.
#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub name: String,
    pub digest: String,
    /// the artifact digest this stage started from, when warm-started
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dev_score: Option<f64>,
    pub duration_ms: u128,
}

/// Run metadata: stage digests, timings, warnings, and the config echo.
/// Timings make this file run-dependent; all other emitted files are
/// byte-identical across same-seed runs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub run_id: String,
    pub config_digest: String,
    pub config: Value,
    pub stages: Vec<StageRecord>,
    pub warnings: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex_string(&hasher.finalize())
}
