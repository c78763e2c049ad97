use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, Write};
use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context};
use base64::Engine;
use clap::{Args, Parser, Subcommand};
use proml_cli::audit::{render_lineage, verify_file, walk_lineage, Verdict, VerifyError};
use proml_cli::bench::{self, BenchOptions};
use proml_cli::netinit::{init_network, Layout};
use proml_cli::report;
use proml_cli::workload::Workload;
use proml_cli::{HttpApi, NodeApi};
use proml_core::contracts::{AssetMetadata, WorkflowActivity};
use proml_core::offchain::ContentId;
use proml_core::{Address, Keypair, TxId};
use proml_node::types::{CaptureKind, CaptureRequest, CaptureResponse, PayloadJson};
use proml_node::KeyFile;

/// Provenance ledger client.
#[derive(Parser)]
#[command(name = "proml", version)]
struct Cli {
    /// Base URL of the node API.
    #[arg(
        long,
        global = true,
        env = "PROML_NODE",
        default_value = "http://127.0.0.1:8080"
    )]
    node: String,
    /// Print JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Meta {
    #[arg(long)]
    name: String,
    #[arg(long, default_value = "1")]
    version: String,
    #[arg(long, default_value = "")]
    description: String,
}

impl Meta {
    fn metadata(self) -> AssetMetadata {
        AssetMetadata {
            name: self.name,
            version: self.version,
            description: self.description,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Register a dataset, optionally derived from another and with its file.
    RegisterDataset {
        #[command(flatten)]
        meta: Meta,
        #[arg(long)]
        ancestor: Option<Address>,
        /// Stored off chain; its hash becomes the dataset anchor.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    RegisterModel {
        #[command(flatten)]
        meta: Meta,
    },
    /// Record a workflow activity on an asset.
    Record {
        #[arg(long)]
        asset: Address,
        #[arg(long)]
        activity: WorkflowActivity,
        /// JSON object of parameters.
        #[arg(long)]
        params_file: Option<PathBuf>,
        #[arg(long)]
        inputs_file: Option<PathBuf>,
        #[arg(long)]
        outputs_file: Option<PathBuf>,
        /// Stored off chain and recorded as the `artifact` output.
        #[arg(long)]
        artifact_file: Option<PathBuf>,
    },
    /// Publish an asset's file and anchor its hash on chain.
    Publish {
        #[arg(long)]
        asset: Address,
        #[arg(long)]
        file: PathBuf,
    },
    /// Show an asset's history; `--lineage` follows inputs and ancestors.
    History {
        #[arg(long)]
        asset: Address,
        #[arg(long)]
        lineage: bool,
    },
    /// Compare a local file with an asset's on-chain anchor. Exits 2 on mismatch.
    Verify {
        #[arg(long)]
        asset: Address,
        #[arg(long)]
        file: PathBuf,
    },
    /// Show a transaction, optionally waiting for inclusion.
    Tx {
        id: TxId,
        /// Seconds to wait for inclusion.
        #[arg(long, default_value_t = 0)]
        wait: u64,
    },
    Status,
    /// Fetch a stored blob by content id.
    Blob {
        id: ContentId,
        #[arg(long)]
        out: PathBuf,
    },
    /// Create a passphrase-sealed key file.
    Keygen {
        #[arg(long)]
        out: PathBuf,
    },
    /// Write genesis, keys and configs for a local network.
    InitNetwork {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 5)]
        validators: usize,
        /// Comma-separated names of non-validating participants.
        #[arg(long, value_delimiter = ',')]
        participants: Vec<String>,
        #[arg(long, default_value_t = 13)]
        block_interval: u64,
        /// Unix seconds of slot 0; defaults to the next whole minute.
        #[arg(long)]
        genesis_time: Option<u64>,
        #[arg(long, default_value = "proml-local")]
        chain_id: String,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long, default_value_t = 8080)]
        api_port: u16,
        #[arg(long, default_value_t = 9080)]
        p2p_port: u16,
    },
    #[command(subcommand)]
    Bench(BenchCmd),
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Replay the ten-op workload and time each op.
    Run {
        #[arg(long, default_value_t = 10)]
        replications: u32,
        /// Seconds between ops.
        #[arg(long, default_value_t = 10)]
        inter_op_delay: u64,
        #[arg(long)]
        out: PathBuf,
        /// Node that submits the dataset ops; defaults to --node.
        #[arg(long)]
        data_node: Option<String>,
        /// Node that submits the model ops; defaults to --node.
        #[arg(long)]
        model_node: Option<String>,
        /// Seconds an op may take to reach 12 confirmations.
        #[arg(long, default_value_t = 600)]
        timeout: u64,
        #[arg(long, default_value_t = 2026)]
        phase_seed: u64,
        /// Start each replication right away instead of at a random
        /// point in the slot.
        #[arg(long)]
        no_phase_jitter: bool,
    },
    /// Summarize a results file.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn passphrase() -> anyhow::Result<String> {
    if let Ok(p) = std::env::var("PROML_PASSPHRASE") {
        return Ok(p);
    }
    eprint!("passphrase: ");
    let mut line = String::new();
    std::io::stdin().lock().read_line(&mut line)?;
    Ok(line.trim_end_matches(['\r', '\n']).to_string())
}

fn read_object(path: &Path) -> anyhow::Result<BTreeMap<String, serde_json::Value>> {
    let text = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_slice(&text)
        .with_context(|| format!("{} is not a JSON object", path.display()))
}

fn inline(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(base64::engine::general_purpose::STANDARD.encode(bytes))
}

fn print_json<T: serde::Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializes"));
}

async fn submit(api: &HttpApi, req: CaptureRequest, json: bool) -> anyhow::Result<CaptureResponse> {
    let resp = api.capture(&req).await?;
    if json {
        print_json(&resp);
    } else {
        println!("{}", resp.tx_id);
        if let Some(a) = resp.asset {
            println!("asset {a}");
        }
        if let Some(c) = resp.content {
            println!("content {c}");
        }
    }
    Ok(resp)
}

async fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let api = HttpApi::new(&cli.node);
    let json = cli.json;
    match cli.cmd {
        Cmd::RegisterDataset {
            meta,
            ancestor,
            file,
        } => {
            let mut req = CaptureRequest::new(CaptureKind::RegisterDataset);
            req.metadata = Some(meta.metadata());
            req.ancestor = ancestor;
            req.inline_blob = file.as_deref().map(inline).transpose()?;
            submit(&api, req, json).await?;
        }
        Cmd::RegisterModel { meta } => {
            let mut req = CaptureRequest::new(CaptureKind::RegisterModel);
            req.metadata = Some(meta.metadata());
            submit(&api, req, json).await?;
        }
        Cmd::Record {
            asset,
            activity,
            params_file,
            inputs_file,
            outputs_file,
            artifact_file,
        } => {
            let section = |p: Option<PathBuf>| p.as_deref().map(read_object).transpose();
            let mut req = CaptureRequest::new(CaptureKind::RecordActivity);
            req.asset = Some(asset);
            req.activity = Some(activity);
            req.payload = Some(PayloadJson {
                inputs: section(inputs_file)?.unwrap_or_default(),
                outputs: section(outputs_file)?.unwrap_or_default(),
                params: section(params_file)?.unwrap_or_default(),
            });
            req.inline_blob = artifact_file.as_deref().map(inline).transpose()?;
            submit(&api, req, json).await?;
        }
        Cmd::Publish { asset, file } => {
            let local = ContentId::of_reader(std::io::BufReader::new(File::open(&file)?))?;
            let mut req = CaptureRequest::new(CaptureKind::Publish);
            req.asset = Some(asset);
            req.inline_blob = Some(inline(&file)?);
            let resp = submit(&api, req, json).await?;
            if resp.content != Some(local) {
                bail!(
                    "node stored {:?}, local file hashes to {local}",
                    resp.content
                );
            }
        }
        Cmd::History { asset, lineage } => {
            if lineage {
                let l = walk_lineage(&api, &asset).await?;
                if json {
                    print_json(&l);
                } else {
                    print!("{}", render_lineage(&l));
                }
            } else {
                let view = api.asset(&asset).await?;
                let history = api.history(&asset).await?;
                if json {
                    print_json(&serde_json::json!({ "asset": view, "history": history }));
                } else {
                    let l = proml_cli::audit::Lineage {
                        assets: vec![proml_cli::audit::LineageEntry {
                            asset: view,
                            history,
                        }],
                        edges: Vec::new(),
                    };
                    print!("{}", render_lineage(&l));
                }
            }
        }
        Cmd::Verify { asset, file } => match verify_file(&api, &asset, &file).await {
            Ok(Verdict::Match(id)) => println!("match {id}"),
            Ok(Verdict::Mismatch { anchored, local }) => {
                println!("mismatch: anchored {anchored}, file {local}");
                return Ok(ExitCode::from(2));
            }
            Err(VerifyError::Api(e)) => return Err(e.into()),
            Err(e) => return Err(e.into()),
        },
        Cmd::Tx { id, wait } => {
            let deadline = tokio::time::Instant::now() + Duration::from_secs(wait);
            let mut st = api.tx_status(&id).await?;
            while !st.included && st.rejected.is_none() && tokio::time::Instant::now() < deadline {
                tokio::time::sleep(Duration::from_millis(500)).await;
                st = api.tx_status(&id).await?;
            }
            print_json(&st);
        }
        Cmd::Status => print_json(&api.status().await?),
        Cmd::Blob { id, out } => {
            let bytes = api.blob(&id).await?;
            std::fs::write(&out, bytes).with_context(|| format!("writing {}", out.display()))?;
            println!("{id}");
        }
        Cmd::Keygen { out } => {
            if out.exists() {
                bail!("{} already exists", out.display());
            }
            let key = Keypair::generate();
            KeyFile::seal(&key, &passphrase()?)?.write(&out)?;
            println!("address {}", key.address());
            println!("public_key {}", key.public_key());
        }
        Cmd::InitNetwork {
            dir,
            validators,
            participants,
            block_interval,
            genesis_time,
            chain_id,
            host,
            api_port,
            p2p_port,
        } => {
            let now = SystemTime::now().duration_since(UNIX_EPOCH)?.as_secs();
            let layout = Layout {
                chain_id,
                validators,
                participants,
                genesis_time: genesis_time.unwrap_or(now / 60 * 60 + 60),
                block_interval_seconds: block_interval,
                host,
                api_port,
                p2p_port,
            };
            let (genesis, nodes) = init_network(&dir, &layout, &passphrase()?)?;
            println!("genesis {} at {}", genesis.chain_id, genesis.genesis_time);
            for n in nodes {
                println!(
                    "{} {:?} {} api {} config {}",
                    n.name,
                    n.role,
                    n.address,
                    n.config.api_listen,
                    n.dir.join("config.json").display()
                );
            }
        }
        Cmd::Bench(BenchCmd::Run {
            replications,
            inter_op_delay,
            out,
            data_node,
            model_node,
            timeout,
            phase_seed,
            no_phase_jitter,
        }) => {
            let data = data_node
                .map(|u| HttpApi::new(&u))
                .unwrap_or_else(|| api.clone());
            let dev = model_node
                .map(|u| HttpApi::new(&u))
                .unwrap_or_else(|| api.clone());
            let opts = BenchOptions {
                replications,
                inter_op_delay: Duration::from_secs(inter_op_delay),
                timeout: Duration::from_secs(timeout),
                phase_seed: (!no_phase_jitter).then_some(phase_seed),
                ..BenchOptions::default()
            };
            let rows = bench::run(&data, &dev, &Workload::kdd(), &opts, |row| {
                eprintln!(
                    "rep {} {} {} gas {:?}",
                    row.replication, row.op_label, row.status, row.gas_used
                );
            })
            .await?;
            let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            bench::write_csv(file, &rows)?;
            print!("{}", report::render(&report::summarize(&rows)));
        }
        Cmd::Bench(BenchCmd::Report { input }) => {
            let file =
                File::open(&input).with_context(|| format!("opening {}", input.display()))?;
            let rows = report::read_rows(file)?;
            print!("{}", report::render(&report::summarize(&rows)));
        }
    }
    std::io::stdout().flush()?;
    Ok(ExitCode::SUCCESS)
}

#[tokio::main]
async fn main() -> ExitCode {
    match run(Cli::parse()).await {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
