use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use tokio::sync::Mutex;

use occam::http::router;
use occam_core::control::{Store, DEFAULT_SEED};

#[derive(Debug, Parser)]
#[command(
    name = "occamd",
    version,
    about = "HTTP control API for the occam engine"
)]
struct Args {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, env = "OCCAM_STATE_DIR", default_value = "./state")]
        state_dir: PathBuf,
        #[arg(long, env = "OCCAM_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

#[tokio::main]
async fn main() -> ExitCode {
    let Cmd::Serve {
        port,
        host,
        state_dir,
        seed,
    } = Args::parse().command;
    let store = match Store::open(&state_dir, seed) {
        Ok(store) => store,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let app = router(Arc::new(Mutex::new(store)));
    let listener = match tokio::net::TcpListener::bind((host.as_str(), port)).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: cannot bind {host}:{port}: {e}");
            return ExitCode::FAILURE;
        }
    };
    eprintln!("occamd listening on {host}:{port}");
    if let Err(e) = axum::serve(listener, app).await {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
