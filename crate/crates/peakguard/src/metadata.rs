use serde::{Deserialize, Serialize};

use crate::config::ProjectConfig;

/// Provenance record written next to every result set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
}

impl RunMetadata {
    pub fn new(command: &str, cfg: &ProjectConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed: cfg.seed,
            config_hash: cfg.hash(),
        }
    }

    /// Comment line heading every CSV file.
    pub fn csv_comment(&self) -> String {
        format!(
            "# {} {} command={} seed={} config_hash={}",
            self.tool, self.version, self.command, self.seed, self.config_hash
        )
    }
}

/// Extracts the config hash from the first line of a CSV or from an SVG
/// comment, to detect results produced by a different configuration.
pub fn embedded_config_hash(text: &str) -> Option<&str> {
    let start = text.find("config_hash=")? + "config_hash=".len();
    let rest = &text[start..];
    let end = rest.find(|c: char| !c.is_ascii_hexdigit()).unwrap_or(rest.len());
    Some(&rest[..end]).filter(|h| !h.is_empty())
}
