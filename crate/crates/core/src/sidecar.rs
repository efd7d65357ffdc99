//! JSON sidecars that record how an output file was produced.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;

pub const TOOL: &str = "hemipwi";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub tool: String,
    pub version: String,
    /// Subcommand that produced the outputs.
    pub command: String,
    /// Full run configuration; replaying it must reproduce the outputs.
    pub config: Value,
    /// Summary numbers, informational only.
    #[serde(default)]
    pub results: Value,
    /// Output files, relative to the sidecar.
    #[serde(default)]
    pub outputs: Vec<String>,
}

impl Sidecar {
    pub fn new(command: &str, config: Value) -> Self {
        Self {
            tool: TOOL.to_string(),
            version: VERSION.to_string(),
            command: command.to_string(),
            config,
            results: Value::Null,
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let s = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&s)?)
    }
}
