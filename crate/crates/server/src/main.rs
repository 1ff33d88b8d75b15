use std::path::PathBuf;
use std::sync::Arc;

use caseval_core::fixtures;
use caseval_server::{router, Store, StoreError};
use clap::Parser;

#[derive(Parser)]
#[command(name = "caseval-server", version, about = "Serve assurance cases over HTTP")]
struct Args {
    /// Address to listen on.
    #[arg(long, env = "CASEVAL_BIND", default_value = "127.0.0.1:8080")]
    bind: String,
    /// Directory holding one canonical document per case.
    #[arg(long, env = "CASEVAL_DATA_DIR", default_value = "data")]
    data_dir: PathBuf,
    /// Add the bundled example cases if they are not already stored.
    #[arg(long)]
    load_fixtures: bool,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    let args = Args::parse();
    let store = Arc::new(Store::open(&args.data_dir)?);
    if args.load_fixtures {
        for (id, text) in [("lightbulb", fixtures::LIGHTBULB), ("eliminative", fixtures::ELIMINATIVE_LIGHT)] {
            match store.create(id, fixtures::document(text)).await {
                Ok(_) | Err(StoreError::Exists(_)) => {}
                Err(e) => anyhow::bail!("cannot load fixture {id}: {e:?}"),
            }
        }
    }
    let listener = tokio::net::TcpListener::bind(&args.bind).await?;
    tracing::info!(addr = %listener.local_addr()?, data_dir = %args.data_dir.display(), "listening");
    axum::serve(listener, router(store)).await?;
    Ok(())
}
