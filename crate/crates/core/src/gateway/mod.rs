//! Access to the chat-completion and embedding providers, plus prompt
//! rendering. Every model call in the engine goes through [`Gateway`].

mod config;
mod embedding;
mod provider;
mod template;

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

pub use config::{
    load_script, DecodingConfig, DecodingOverride, EmbeddingConfig, GatewayConfig, ProviderConfig,
    ProviderKind, Script,
};
pub use embedding::{Embedder, Embedding, HashEmbedder, NORM_TOLERANCE};
pub use provider::{
    ChatProvider, CompletionRequest, Decoding, HttpTransport, ProviderReply, RetryPolicy,
    ScriptEntry, ScriptedProvider, Transport, TransportError, WireEmbedder, WireEndpoint,
    WireProvider,
};
pub use template::{has_placeholder, PromptTemplate, TemplateError, TemplateRegistry};

use crate::types::ToolTag;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GatewayError {
    #[error("invalid completion request: {0}")]
    InvalidRequest(String),
    #[error("provider transport failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("provider returned an unexpected body: {0}")]
    Protocol(String),
    #[error("scripted provider has no completion queued for tool {tool}")]
    ScriptUnderflow { tool: ToolTag },
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("embedding failure: {0}")]
    Embedding(String),
    #[error("configuration error: {0}")]
    Config(String),
}

impl GatewayError {
    /// Script underflow means the test script and the engine disagree; it
    /// must never be absorbed by a fallback.
    pub fn is_fatal(&self) -> bool {
        matches!(self, GatewayError::ScriptUnderflow { .. })
    }
}

pub trait Clock: Send + Sync {
    fn now_ms(&self) -> u64;
}

#[derive(Debug)]
pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        Self {
            origin: Instant::now(),
        }
    }
}

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        self.origin.elapsed().as_millis() as u64
    }
}

/// Clock that never advances, so recorded latencies are always zero and
/// scripted event logs are byte-reproducible.
#[derive(Debug, Default, Clone, Copy)]
pub struct FrozenClock;

impl Clock for FrozenClock {
    fn now_ms(&self) -> u64 {
        0
    }
}

/// A finished model call with everything the event log records about it.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub attempts: u32,
    pub latency_ms: u64,
    pub decoding: Decoding,
    pub timeout_ms: u64,
}

pub struct Gateway {
    chat: Arc<dyn ChatProvider>,
    embedder: Arc<dyn Embedder>,
    templates: TemplateRegistry,
    decoding: DecodingConfig,
    clock: Arc<dyn Clock>,
}

impl Gateway {
    /// Gateway with the built-in prompt catalog, default decoding and a
    /// frozen clock.
    pub fn new(chat: Arc<dyn ChatProvider>, embedder: Arc<dyn Embedder>) -> Self {
        Self {
            chat,
            embedder,
            templates: crate::tools::prompts::catalog(),
            decoding: DecodingConfig::default(),
            clock: Arc::new(FrozenClock),
        }
    }

    /// Scripted chat provider plus the hash embedder at `dim`.
    pub fn scripted(provider: Arc<ScriptedProvider>, dim: usize) -> Self {
        Self::new(provider, Arc::new(HashEmbedder::new(dim)))
    }

    pub fn with_decoding(mut self, decoding: DecodingConfig) -> Self {
        self.decoding = decoding;
        self
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn with_templates(mut self, templates: TemplateRegistry) -> Self {
        self.templates = templates;
        self
    }

    /// Builds a gateway from configuration. A scripted provider starts with
    /// the configured script file, if any. Wire providers use the system
    /// clock.
    pub fn from_config(cfg: &GatewayConfig) -> Result<Self, GatewayError> {
        let hash = || Arc::new(HashEmbedder::new(cfg.embedding.dim)) as Arc<dyn Embedder>;
        let gateway = match cfg.provider.kind {
            ProviderKind::Scripted => {
                let provider = match &cfg.provider.script {
                    Some(path) => ScriptedProvider::from_script(load_script(path)?),
                    None => ScriptedProvider::new(),
                };
                Self::new(Arc::new(provider), hash())
            }
            ProviderKind::Wire => {
                let api_key = std::env::var(&cfg.provider.api_key_env).ok();
                let endpoint = WireEndpoint {
                    base_url: cfg.provider.base_url.clone(),
                    model: cfg.provider.model.clone(),
                    api_key: api_key.clone(),
                };
                let chat = WireProvider::new(endpoint, Box::new(HttpTransport::new()), cfg.retry);
                let embedder = match &cfg.provider.embedding_model {
                    Some(model) => Arc::new(WireEmbedder::new(
                        WireEndpoint {
                            base_url: cfg.provider.base_url.clone(),
                            model: model.clone(),
                            api_key,
                        },
                        Box::new(HttpTransport::new()),
                        cfg.retry,
                        cfg.embedding.dim,
                        cfg.decoding.timeout(),
                    )) as Arc<dyn Embedder>,
                    None => hash(),
                };
                Self::new(Arc::new(chat), embedder).with_clock(Arc::new(SystemClock::default()))
            }
        };
        Ok(gateway.with_decoding(cfg.decoding.clone()))
    }

    pub fn render_prompt(
        &self,
        template_id: &str,
        bindings: &HashMap<&str, String>,
    ) -> Result<String, TemplateError> {
        self.templates.render(template_id, bindings)
    }

    pub fn templates(&self) -> &TemplateRegistry {
        &self.templates
    }

    pub fn complete(&self, tool: ToolTag, prompt: String) -> Result<Completion, GatewayError> {
        let request = CompletionRequest {
            prompt,
            decoding: self.decoding.for_tool(tool),
            tool_tag: tool,
            timeout: self.decoding.timeout(),
        };
        request.validate()?;
        let start = self.clock.now_ms();
        let reply = self.chat.complete(&request)?;
        Ok(Completion {
            text: reply.text,
            attempts: reply.attempts,
            latency_ms: self.clock.now_ms().saturating_sub(start),
            decoding: request.decoding,
            timeout_ms: self.decoding.timeout_ms,
        })
    }

    pub fn embed(&self, text: &str) -> Result<Embedding, GatewayError> {
        let e = self.embedder.embed(text)?;
        if e.dim() != self.embedder.dim() {
            return Err(GatewayError::Embedding(format!(
                "embedder produced dim {} but declares {}",
                e.dim(),
                self.embedder.dim()
            )));
        }
        Ok(e)
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedder.dim()
    }

    pub fn decoding(&self) -> &DecodingConfig {
        &self.decoding
    }

    pub fn clock(&self) -> &dyn Clock {
        self.clock.as_ref()
    }
}
