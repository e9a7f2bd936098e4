use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;
use forensica_core::config::GenConfig;
use forensica_service::{router, spawn_reaper, Hub};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "forensica-service", version, about = "Serve investigation sessions over HTTP and WebSocket")]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Idle seconds before a session expires.
    #[arg(long, default_value_t = 1800)]
    ttl: u64,
    /// JSON generation config; missing fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt().with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info"))).init();
    let args = Args::parse();
    let config = match &args.config {
        None => GenConfig::default(),
        Some(p) => match std::fs::read_to_string(p).map_err(|e| e.to_string()).and_then(|t| GenConfig::from_json(&t).map_err(|e| e.to_string())) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: invalid config {}: {e}", p.display());
                return ExitCode::from(2);
            }
        },
    };
    let hub = Hub::new(config, Duration::from_secs(args.ttl.max(1)));
    spawn_reaper(hub.clone());
    let listener = match tokio::net::TcpListener::bind(args.addr).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: cannot bind {}: {e}", args.addr);
            return ExitCode::from(1);
        }
    };
    tracing::info!(addr = %args.addr, "listening");
    if let Err(e) = axum::serve(listener, router(hub)).await {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
