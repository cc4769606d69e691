//! Provenance record written into every output file.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::error::CliResult;

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_hash: String,
    pub base_seed: u64,
}

impl Metadata {
    pub fn new(config: &Config) -> CliResult<Self> {
        Ok(Self {
            tool: "ctmix",
            version: env!("CARGO_PKG_VERSION"),
            command: config.command(),
            config_hash: hex::encode(Sha256::digest(config.canonical().as_bytes())),
            base_seed: config.get("seed")?,
        })
    }

    /// Lines for a CSV preamble, without the leading `#`.
    pub fn comment_lines(&self) -> Vec<String> {
        vec![
            format!("tool={} version={}", self.tool, self.version),
            format!("command={}", self.command),
            format!("config_hash={}", self.config_hash),
            format!("base_seed={}", self.base_seed),
        ]
    }
}
