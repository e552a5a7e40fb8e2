//! TOML run configuration. Command-line flags override these values.
//!
//! ```toml
//! [run]
//! jobs = 4
//! sidecar_url = "http://127.0.0.1:8750"
//!
//! [chunker]
//! chunk_words = 1024
//! min_target_words = 30
//!
//! [case_summarizer]
//! date_boost = 0.2
//! entity_boost = 0.2
//! heading_boost = 0.1
//! heading_window = 3
//!
//! [backend.chatgpt]
//! base_url = "https://api.example.com/v1"
//! model = "gpt-3.5-turbo"
//!
//! [families]
//! "chatgpt-summ-1024" = "chatgpt"
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use veridict_core::chunker::ChunkConfig;
use veridict_core::extractive::BoostWeights;

use crate::error::{io_err, Error, Result};

pub const API_KEY_ENV: &str = "VERIDICT_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub chunker: ChunkerSection,
    pub case_summarizer: CaseSummarizerSection,
    pub backend: BTreeMap<String, BackendSection>,
    /// Method id to method family, for best-value markers.
    pub families: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub jobs: Option<usize>,
    pub sidecar_url: Option<String>,
    pub abbreviations: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChunkerSection {
    pub chunk_words: usize,
    pub min_target_words: usize,
}

impl Default for ChunkerSection {
    fn default() -> Self {
        Self { chunk_words: 1024, min_target_words: ChunkConfig::default().min_target_words }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaseSummarizerSection {
    pub date_boost: f64,
    pub entity_boost: f64,
    pub heading_boost: f64,
    pub heading_window: usize,
}

impl Default for CaseSummarizerSection {
    fn default() -> Self {
        let w = BoostWeights::default();
        Self { date_boost: w.date, entity_boost: w.entity, heading_boost: w.heading, heading_window: w.heading_window }
    }
}

impl CaseSummarizerSection {
    pub fn weights(&self) -> Result<BoostWeights> {
        for (name, v) in [("date_boost", self.date_boost), ("entity_boost", self.entity_boost), ("heading_boost", self.heading_boost)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("case_summarizer.{name} must be a non-negative number, got {v}")));
            }
        }
        Ok(BoostWeights {
            date: self.date_boost,
            entity: self.entity_boost,
            heading: self.heading_boost,
            heading_window: self.heading_window,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSection {
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the API key.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_key_env() -> String {
    API_KEY_ENV.into()
}

fn default_timeout() -> u64 {
    120
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}
