use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::provider::{Decoding, RetryPolicy, ScriptEntry};
use super::GatewayError;
use crate::types::ToolTag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    Scripted,
    Wire,
}

impl std::str::FromStr for ProviderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "scripted" => Ok(ProviderKind::Scripted),
            "wire" => Ok(ProviderKind::Wire),
            other => Err(format!("unknown provider kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub base_url: String,
    pub model: String,
    /// Embedding model for the wire provider. When unset, the offline hash
    /// embedder is used even with a wire chat provider.
    pub embedding_model: Option<String>,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
    /// JSON file of per-tool scripted completions (scripted provider only).
    pub script: Option<PathBuf>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Scripted,
            base_url: "http://localhost:8000/v1".into(),
            model: "gpt-3.5-turbo".into(),
            embedding_model: None,
            api_key_env: "TUTOR_API_KEY".into(),
            script: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DecodingOverride {
    pub temperature: Option<f64>,
    pub max_output_tokens: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodingConfig {
    pub interaction_temperature: f64,
    pub backend_temperature: f64,
    pub max_output_tokens: u32,
    pub timeout_ms: u64,
    pub overrides: BTreeMap<ToolTag, DecodingOverride>,
}

impl Default for DecodingConfig {
    fn default() -> Self {
        Self {
            interaction_temperature: 0.7,
            backend_temperature: 0.0,
            max_output_tokens: 1024,
            timeout_ms: 60_000,
            overrides: BTreeMap::new(),
        }
    }
}

impl DecodingConfig {
    pub fn for_tool(&self, tool: ToolTag) -> Decoding {
        let base = Decoding {
            temperature: if tool.is_interaction() {
                self.interaction_temperature
            } else {
                self.backend_temperature
            },
            max_output_tokens: self.max_output_tokens,
        };
        match self.overrides.get(&tool) {
            Some(o) => Decoding {
                temperature: o.temperature.unwrap_or(base.temperature),
                max_output_tokens: o.max_output_tokens.unwrap_or(base.max_output_tokens),
            },
            None => base,
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub dim: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self { dim: 64 }
    }
}

/// Top-level model configuration, usually read from a TOML file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct GatewayConfig {
    pub provider: ProviderConfig,
    pub decoding: DecodingConfig,
    pub embedding: EmbeddingConfig,
    pub retry: RetryPolicy,
}

impl GatewayConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, GatewayError> {
        let cfg: Self = toml::from_str(text).map_err(|e| GatewayError::Config(e.to_string()))?;
        if cfg.embedding.dim == 0 {
            return Err(GatewayError::Config(
                "embedding.dim must be positive".into(),
            ));
        }
        if cfg.decoding.max_output_tokens == 0 {
            return Err(GatewayError::Config(
                "decoding.max_output_tokens must be positive".into(),
            ));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }
}

/// Per-tool completion queues, as stored in scenario and script files.
pub type Script = BTreeMap<ToolTag, Vec<ScriptEntry>>;

pub fn load_script(path: &Path) -> Result<Script, GatewayError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))
}
