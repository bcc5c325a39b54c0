use std::path::{Path, PathBuf};

use serde::Deserialize;
use tutor_core::gateway::GatewayConfig;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default)]
pub struct ServerConfig {
    pub port: u16,
    pub data_dir: PathBuf,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            port: 8080,
            data_dir: PathBuf::from("data"),
        }
    }
}

/// One TOML file: a `[server]` table next to the gateway's tables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ServiceConfig {
    pub server: ServerConfig,
    pub gateway: GatewayConfig,
}

#[derive(Deserialize)]
struct ServerOnly {
    #[serde(default)]
    server: ServerConfig,
}

impl ServiceConfig {
    pub fn from_toml_str(text: &str) -> anyhow::Result<Self> {
        let ServerOnly { server } = toml::from_str(text)?;
        let gateway = GatewayConfig::from_toml_str(text)?;
        Ok(Self { server, gateway })
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        Self::from_toml_str(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tutor_core::gateway::ProviderKind;

    #[test]
    fn server_and_gateway_tables() {
        let cfg = ServiceConfig::from_toml_str(
            r#"
            [server]
            port = 9000
            data_dir = "/var/lib/tutor"

            [provider]
            kind = "wire"
            model = "gpt-4"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.server.port, 9000);
        assert_eq!(cfg.server.data_dir, PathBuf::from("/var/lib/tutor"));
        assert_eq!(cfg.gateway.provider.kind, ProviderKind::Wire);
        assert_eq!(cfg.gateway.provider.model, "gpt-4");
    }

    #[test]
    fn empty_file_is_defaults() {
        assert_eq!(
            ServiceConfig::from_toml_str("").unwrap(),
            ServiceConfig::default()
        );
    }
}
