use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use clap::Parser;
use tracing_subscriber::EnvFilter;
use tutor_core::gateway::ProviderKind;
use tutor_core::Gateway;
use tutor_service::{App, ServiceConfig};

#[derive(Parser, Debug)]
#[command(name = "tutor-service", about = "Serve tutoring sessions over HTTP")]
struct Args {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    port: Option<u16>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// `scripted` or `wire`.
    #[arg(long)]
    provider: Option<ProviderKind>,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")),
        )
        .init();
    let args = Args::parse();

    let mut cfg = match &args.config {
        Some(path) => ServiceConfig::load(path)?,
        None => ServiceConfig::default(),
    };
    if let Some(port) = args.port {
        cfg.server.port = port;
    }
    if let Some(dir) = args.data_dir {
        cfg.server.data_dir = dir;
    }
    if let Some(kind) = args.provider {
        cfg.gateway.provider.kind = kind;
    }

    let gateway =
        Arc::new(Gateway::from_config(&cfg.gateway).context("building the model gateway")?);
    let (app, quarantined) = App::open(gateway, &cfg.server.data_dir)?;
    for q in &quarantined {
        tracing::warn!(session = %q.session_id, reason = %q.reason, "session quarantined");
    }

    let addr = std::net::SocketAddr::from(([0, 0, 0, 0], cfg.server.port));
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, app.router())
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
