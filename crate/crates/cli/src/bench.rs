//! Replays the workload against a running network and times each op to
//! 1, 6 and 12 confirmations.
//!
//! Submit time is the client clock when the node accepted the request;
//! confirmation times are block timestamps. On one host the two clocks
//! agree closely enough, across hosts they may not.

use std::time::Duration;

use proml_core::engine::ExecStatus;
use proml_core::TxId;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use tokio::time::{sleep, sleep_until, Instant};

use crate::api::{ApiError, NodeApi};
use crate::workload::{Bindings, Role, Workload};

/// Column order of the results file.
pub const CSV_COLUMNS: [&str; 9] = [
    "op_label",
    "replication",
    "submit_unix_ms",
    "t1_unix_ms",
    "t6_unix_ms",
    "t12_unix_ms",
    "gas_used",
    "tx_id",
    "status",
];

pub const CONFIRMATION_LEVELS: [u64; 3] = [1, 6, 12];

pub const STATUS_OK: &str = "ok";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchRow {
    pub op_label: String,
    pub replication: u32,
    pub submit_unix_ms: u64,
    pub t1_unix_ms: Option<u64>,
    pub t6_unix_ms: Option<u64>,
    pub t12_unix_ms: Option<u64>,
    pub gas_used: Option<u64>,
    pub tx_id: Option<TxId>,
    pub status: String,
}

impl BenchRow {
    fn new(label: &str, replication: u32) -> BenchRow {
        BenchRow {
            op_label: label.to_string(),
            replication,
            submit_unix_ms: 0,
            t1_unix_ms: None,
            t6_unix_ms: None,
            t12_unix_ms: None,
            gas_used: None,
            tx_id: None,
            status: "pending".into(),
        }
    }

    pub fn times(&self) -> [Option<u64>; 3] {
        [self.t1_unix_ms, self.t6_unix_ms, self.t12_unix_ms]
    }

    /// Milliseconds from submission to each confirmation level.
    pub fn latencies_ms(&self) -> [Option<u64>; 3] {
        self.times()
            .map(|t| t.map(|t| t.saturating_sub(self.submit_unix_ms)))
    }

    fn complete(&self) -> bool {
        self.t12_unix_ms.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub replications: u32,
    pub inter_op_delay: Duration,
    /// How long an op may take to reach 12 confirmations.
    pub timeout: Duration,
    pub poll: Duration,
    /// Each replication waits a random part of a block interval before
    /// its first op, so start times are spread over the slot. `None`
    /// starts right away.
    pub phase_seed: Option<u64>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            replications: 10,
            inter_op_delay: Duration::from_secs(10),
            timeout: Duration::from_secs(600),
            poll: Duration::from_millis(500),
            phase_seed: Some(2026),
        }
    }
}

/// Runs every replication in turn. `data` submits the dataset ops and
/// `dev` the model ops. `on_row` sees each row once its replication ends.
pub async fn run<A: NodeApi>(
    data: &A,
    dev: &A,
    workload: &Workload,
    opts: &BenchOptions,
    mut on_row: impl FnMut(&BenchRow),
) -> Result<Vec<BenchRow>, ApiError> {
    let interval_ms = data.status().await?.block_interval_seconds * 1000;
    let mut rng = opts.phase_seed.map(StdRng::seed_from_u64);
    let mut rows = Vec::new();
    for r in 0..opts.replications {
        if let Some(rng) = rng.as_mut() {
            sleep(Duration::from_millis(rng.gen_range(0..interval_ms))).await;
        }
        let batch = replicate(data, dev, workload, r, opts).await;
        batch.iter().for_each(&mut on_row);
        rows.extend(batch);
    }
    Ok(rows)
}

struct Flight {
    row: usize,
    role: Role,
    tx_id: TxId,
    deadline: Instant,
    height: Option<u64>,
}

async fn replicate<A: NodeApi>(
    data: &A,
    dev: &A,
    workload: &Workload,
    replication: u32,
    opts: &BenchOptions,
) -> Vec<BenchRow> {
    let api = |role| match role {
        Role::DataAdmin => data,
        Role::ModelDeveloper => dev,
    };
    let start = Instant::now();
    let mut bound = Bindings::new();
    let mut rows = Vec::new();
    let mut flights = Vec::new();
    for (k, op) in workload.ops.iter().enumerate() {
        sleep_until(start + opts.inter_op_delay * k as u32).await;
        let mut row = BenchRow::new(&op.label, replication);
        let a = api(op.role());
        let result = match op.request(&bound) {
            Ok(req) => a.capture(&req).await.map_err(|e| e.to_string()),
            Err(e) => Err(e.to_string()),
        };
        row.submit_unix_ms = a.now_ms();
        match result {
            Ok(resp) => {
                if let (true, Some(addr)) = (op.registers(), resp.asset) {
                    bound.insert(op.label.clone(), addr);
                }
                row.tx_id = Some(resp.tx_id);
                flights.push(Flight {
                    row: rows.len(),
                    role: op.role(),
                    tx_id: resp.tx_id,
                    deadline: Instant::now() + opts.timeout,
                    height: None,
                });
            }
            Err(e) => row.status = format!("failed: {e}"),
        }
        rows.push(row);
    }

    while !flights.is_empty() {
        let mut still = Vec::new();
        for mut f in flights {
            let row = &mut rows[f.row];
            if let Err(e) = track(api(f.role), &mut f, row).await {
                tracing::debug!("polling {}: {e}", f.tx_id);
            }
            if row.complete() || row.status.starts_with("failed") {
                continue;
            }
            if Instant::now() >= f.deadline {
                row.status = "failed: timeout".into();
                continue;
            }
            still.push(f);
        }
        flights = still;
        if !flights.is_empty() {
            sleep(opts.poll).await;
        }
    }
    rows
}

/// One poll of one transaction. Fills in whatever became known.
async fn track<A: NodeApi>(api: &A, f: &mut Flight, row: &mut BenchRow) -> Result<(), ApiError> {
    let st = api.tx_status(&f.tx_id).await?;
    if let Some(reason) = st.rejected {
        row.status = format!("failed: rejected {reason}");
        return Ok(());
    }
    let Some(h) = st.height else {
        return Ok(());
    };
    if f.height.is_none() {
        f.height = Some(h);
        if let Some(receipt) = &st.receipt {
            row.gas_used = Some(receipt.gas_used);
            row.status = match receipt.status {
                ExecStatus::Success => STATUS_OK.into(),
                ExecStatus::Reverted(r) => format!("reverted: {r:?}"),
            };
        }
    }
    let slots = [
        &mut row.t1_unix_ms,
        &mut row.t6_unix_ms,
        &mut row.t12_unix_ms,
    ];
    for (level, slot) in CONFIRMATION_LEVELS.into_iter().zip(slots) {
        if slot.is_none() && st.confirmations >= level {
            let block = api.block(h + level - 1).await?;
            *slot = Some(block.block.header.timestamp * 1000);
        }
    }
    Ok(())
}

pub fn write_csv<W: std::io::Write>(w: W, rows: &[BenchRow]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)?;
    }
    if rows.is_empty() {
        out.write_record(CSV_COLUMNS)?;
    }
    out.flush()?;
    Ok(())
}
