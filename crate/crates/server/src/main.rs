use confirmability::ingest::ScenarioStore;
use confirmability_server::{router, AppState, Config};

#[tokio::main]
async fn main() {
    if let Err(msg) = run().await {
        eprintln!("confirm-server: {msg}");
        std::process::exit(1);
    }
}

async fn run() -> Result<(), String> {
    let config = Config::from_env()?;
    let store = ScenarioStore::open(&config.store_dir)
        .map_err(|e| format!("cannot open store {}: {e}", config.store_dir.display()))?;
    let listener = tokio::net::TcpListener::bind(config.addr)
        .await
        .map_err(|e| format!("cannot bind {}: {e}", config.addr))?;
    eprintln!(
        "listening on {} (scenarios in {})",
        config.addr,
        config.store_dir.display()
    );
    axum::serve(listener, router(AppState::new(store)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| e.to_string())
}
