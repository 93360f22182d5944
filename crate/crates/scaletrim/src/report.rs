//! Report plumbing shared by the CLI subcommands: every artifact a run
//! writes carries a manifest stating what produced it.

use std::collections::BTreeMap;

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::Result;

/// Bumped whenever the shape of any written artifact changes.
pub const SCHEMA_VERSION: u32 = 1;

/// Provenance block stamped into every output file.
///
/// `parameters` is an ordered map so serialized manifests are stable for a
/// given invocation; `config_sha256` ties an artifact to the exact
/// configuration JSON that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub subcommand: String,
    pub parameters: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub config_sha256: Option<String>,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(subcommand: &str) -> Self {
        RunManifest {
            schema_version: SCHEMA_VERSION,
            tool: "scaletrim".to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            parameters: BTreeMap::new(),
            config_sha256: None,
            timestamp: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn config_hash(mut self, sha256_hex: String) -> Self {
        self.config_sha256 = Some(sha256_hex);
        self
    }

    /// Single-line form for embedding at the top of CSV files.
    pub fn comment_line(&self) -> String {
        format!(
            "# manifest: {}",
            serde_json::to_string(self).expect("manifest serializes")
        )
    }
}

/// JSON artifact wrapper: `{ "manifest": ..., "result": ... }`.
#[derive(Debug, Serialize)]
pub struct Document<T: Serialize> {
    pub manifest: RunManifest,
    pub result: T,
}

pub fn json_document<T: Serialize>(manifest: RunManifest, result: T) -> Result<String> {
    Ok(serde_json::to_string_pretty(&Document {
        manifest,
        result,
    })?)
}

/// CSV cell format for percentage columns: fixed two decimals.
pub fn percent_cell(value: f64) -> String {
    format!("{value:.2}")
}
