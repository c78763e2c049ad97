use std::io::BufRead;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::Parser;
use proml_core::Genesis;
use proml_node::transport::TcpTransport;
use proml_node::{api, Node, NodeConfig, NodeParams, Wallet};

/// Provenance ledger node.
#[derive(Parser)]
#[command(name = "promld", version)]
struct Args {
    /// Path to the node config (JSON).
    #[arg(long)]
    config: PathBuf,
}

fn passphrase() -> anyhow::Result<String> {
    if let Ok(p) = std::env::var("PROML_PASSPHRASE") {
        return Ok(p);
    }
    eprint!("wallet passphrase: ");
    let mut line = String::new();
    std::io::stdin().lock().read_line(&mut line)?;
    Ok(line.trim_end_matches(['\r', '\n']).to_string())
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    let args = Args::parse();
    let cfg = NodeConfig::load(&args.config)?;
    let genesis = Genesis::load(&cfg.genesis_file)
        .with_context(|| format!("loading {}", cfg.genesis_file.display()))?;
    let wallet = Arc::new(
        Wallet::unlock(&cfg.key_file, &passphrase()?)
            .with_context(|| format!("unlocking {}", cfg.key_file.display()))?,
    );
    if genesis.public_key_of(&wallet.address()).is_none() {
        bail!("key {} is not in the genesis file", wallet.address());
    }
    let dial = cfg.peers.iter().map(|p| p.addr.clone()).collect();
    let (transport, inbound) =
        TcpTransport::start(wallet.clone(), &genesis, cfg.p2p_listen, dial).await?;
    let mut params = NodeParams::new(genesis, wallet, cfg.role, cfg.data_dir.clone());
    params.replication_factor = cfg.replication_factor;
    params.gas_limit = cfg.gas_limit;
    let node = Node::start(params, transport, inbound)?;
    let listener = tokio::net::TcpListener::bind(cfg.api_listen).await?;
    tracing::info!(
        address = %node.handle().address(),
        api = %listener.local_addr()?,
        "node started"
    );
    api::serve(listener, node.handle()).await?;
    Ok(())
}
