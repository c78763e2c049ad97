//! Node runtime. One writer task owns every chain and pool mutation; the
//! slot timer and the network feed it through an ordered queue. Readers
//! take the chain lock briefly and never block the writer for long.

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use parking_lot::{Mutex, RwLock};
use proml_core::consensus::proposer_for_slot;
use proml_core::engine::Receipt;
use proml_core::genesis::GenesisError;
use proml_core::ledger::{
    check_signature, intrinsic_gas, Block, ChainInvalid, Ledger, Transaction, TxRejection,
};
use proml_core::offchain::{verify_artifact, BlobStore, ContentId, StoreError, Verification};
use proml_core::segment::{SegmentError, SegmentStore};
use proml_core::{Address, BlockHash, Chain, Genesis, TxId};
use tokio::sync::{mpsc, oneshot, watch};
use tokio::task::JoinHandle;

use crate::clock::Clock;
use crate::config::Role;
use crate::messages::Message;
use crate::pool::Pool;
use crate::transport::{Inbound, Transport};
use crate::wallet::Wallet;

/// Most blocks sent in one sync response.
const SYNC_BATCH: u64 = 256;

pub struct NodeParams {
    pub genesis: Genesis,
    pub wallet: Arc<Wallet>,
    pub role: Role,
    pub data_dir: PathBuf,
    pub replication_factor: usize,
    pub gas_limit: u64,
    pub clock: Clock,
    pub blob_fetch_timeout: Duration,
}

impl NodeParams {
    pub fn new(genesis: Genesis, wallet: Arc<Wallet>, role: Role, data_dir: PathBuf) -> Self {
        NodeParams {
            genesis,
            wallet,
            role,
            data_dir,
            replication_factor: 2,
            gas_limit: 10_000_000,
            clock: Clock::system(),
            blob_fetch_timeout: Duration::from_secs(5),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum NodeError {
    #[error(transparent)]
    Genesis(#[from] GenesisError),
    #[error("validator role needs a key from the genesis validator set")]
    NotAValidator,
    #[error("blob store: {0}")]
    Store(#[from] StoreError),
    #[error("block store: {0}")]
    Segment(#[from] SegmentError),
    #[error("stored chain is invalid: {0}")]
    Chain(#[from] ChainInvalid),
}

/// Counters for tests and diagnostics.
#[derive(Debug, Default)]
pub struct Stats {
    pub blocks_applied: AtomicU64,
    pub blocks_proposed: AtomicU64,
    pub duplicate_blocks: AtomicU64,
    pub rejected_blocks: AtomicU64,
    pub dropped_unknown_peer: AtomicU64,
    pub blob_integrity_failures: AtomicU64,
}

impl Stats {
    pub fn get(counter: &AtomicU64) -> u64 {
        counter.load(Ordering::Relaxed)
    }
}

fn bump(counter: &AtomicU64) {
    counter.fetch_add(1, Ordering::Relaxed);
}

enum Input {
    Tx {
        tx: Transaction,
        origin: Option<Address>,
        reply: Option<oneshot::Sender<Result<(), TxRejection>>>,
    },
    Block {
        block: Block,
        origin: Address,
    },
    Blocks {
        blocks: Vec<Block>,
        origin: Address,
    },
    Slot(u64),
}

pub(crate) struct Shared {
    pub genesis: Genesis,
    pub wallet: Arc<Wallet>,
    pub role: Role,
    pub clock: Clock,
    pub replication_factor: usize,
    pub gas_limit: u64,
    pub blob_fetch_timeout: Duration,
    pub chain: RwLock<Chain>,
    pub pool: Mutex<Pool>,
    pub rejects: Mutex<HashMap<TxId, TxRejection>>,
    pub blobs: BlobStore,
    pub transport: Arc<dyn Transport>,
    pub height: watch::Sender<u64>,
    pub stats: Stats,
    seen_txs: Mutex<HashSet<TxId>>,
    seen_blocks: Mutex<HashSet<BlockHash>>,
    best_seen: AtomicU64,
    blob_waiters: Mutex<HashMap<u64, mpsc::UnboundedSender<Option<Vec<u8>>>>>,
    next_req: AtomicU64,
    segments: Mutex<SegmentStore>,
    input: mpsc::UnboundedSender<Input>,
}

/// A running node. Dropping it stops its tasks.
pub struct Node {
    shared: Arc<Shared>,
    tasks: Vec<JoinHandle<()>>,
}

/// Cheap handle to a node's services.
#[derive(Clone)]
pub struct NodeHandle {
    pub(crate) shared: Arc<Shared>,
}

fn load_chain(genesis: &Genesis, dir: PathBuf) -> Result<(Chain, SegmentStore), NodeError> {
    let (mut segments, records) = SegmentStore::open(dir)?;
    let chain = if records.is_empty() {
        Chain::new(genesis.clone())?
    } else {
        let (blocks, receipts): (Vec<Block>, Vec<Vec<Receipt>>) = records.into_iter().unzip();
        Chain::from_ledger(genesis.clone(), Ledger::from_parts(blocks, receipts))?
    };
    segments.sync_from(chain.ledger())?;
    Ok((chain, segments))
}

impl Node {
    /// Opens the stores under `data_dir`, replays the stored chain and
    /// starts the writer, slot timer and network tasks.
    pub fn start(
        params: NodeParams,
        transport: Arc<dyn Transport>,
        inbound: Inbound,
    ) -> Result<Node, NodeError> {
        params.genesis.check()?;
        let me = params.wallet.address();
        if params.role == Role::Validator
            && !params.genesis.validators.iter().any(|v| v.address == me)
        {
            return Err(NodeError::NotAValidator);
        }
        let (chain, segments) = load_chain(&params.genesis, params.data_dir.join("chain"))?;
        let blobs = BlobStore::open(params.data_dir.join("blobs"))?;
        let (input, input_rx) = mpsc::unbounded_channel();
        let (height, _) = watch::channel(chain.height());
        let shared = Arc::new(Shared {
            best_seen: AtomicU64::new(chain.height()),
            genesis: params.genesis,
            wallet: params.wallet,
            role: params.role,
            clock: params.clock,
            replication_factor: params.replication_factor,
            gas_limit: params.gas_limit,
            blob_fetch_timeout: params.blob_fetch_timeout,
            chain: RwLock::new(chain),
            pool: Mutex::default(),
            rejects: Mutex::default(),
            blobs,
            transport,
            height,
            stats: Stats::default(),
            seen_txs: Mutex::default(),
            seen_blocks: Mutex::default(),
            blob_waiters: Mutex::default(),
            next_req: AtomicU64::new(0),
            segments: Mutex::new(segments),
            input,
        });
        let mut tasks = vec![
            tokio::spawn(writer(shared.clone(), input_rx)),
            tokio::spawn(network(shared.clone(), inbound)),
        ];
        if shared.role == Role::Validator {
            tasks.push(tokio::spawn(slot_timer(shared.clone())));
        }
        tasks.push(tokio::spawn(initial_sync(shared.clone())));
        Ok(Node { shared, tasks })
    }

    pub fn handle(&self) -> NodeHandle {
        NodeHandle {
            shared: self.shared.clone(),
        }
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        for t in self.tasks.drain(..) {
            t.abort();
        }
    }
}

impl Drop for Node {
    fn drop(&mut self) {
        self.stop();
    }
}

async fn writer(shared: Arc<Shared>, mut rx: mpsc::UnboundedReceiver<Input>) {
    while let Some(input) = rx.recv().await {
        match input {
            Input::Tx { tx, origin, reply } => {
                let result = shared.ingest_tx(tx, origin);
                if let Some(reply) = reply {
                    let _ = reply.send(result);
                }
            }
            Input::Block { block, origin } => shared.ingest_block(block, origin),
            Input::Blocks { blocks, origin } => shared.ingest_blocks(blocks, origin),
            Input::Slot(slot) => shared.on_slot(slot),
        }
    }
}

async fn slot_timer(shared: Arc<Shared>) {
    let g = &shared.genesis;
    let genesis_ms = g.genesis_time * 1000;
    let interval_ms = g.block_interval_seconds * 1000;
    let mut last = 0;
    loop {
        let now = shared.clock.now_ms();
        let current = now.saturating_sub(genesis_ms) / interval_ms;
        let slot = (current + 1).max(last + 1);
        shared
            .clock
            .sleep_until_ms(genesis_ms + slot * interval_ms)
            .await;
        if shared.input.send(Input::Slot(slot)).is_err() {
            return;
        }
        last = slot;
    }
}

/// Asks every peer for blocks past our tip once links are up.
async fn initial_sync(shared: Arc<Shared>) {
    for _ in 0..20 {
        let peers = shared.transport.peers();
        if !peers.is_empty() {
            let from = shared.chain.read().height() + 1;
            for p in peers {
                shared.transport.send(
                    &p,
                    Message::GetBlocks {
                        from,
                        to: from + SYNC_BATCH - 1,
                    },
                );
            }
            return;
        }
        tokio::time::sleep(Duration::from_millis(250)).await;
    }
}

async fn network(shared: Arc<Shared>, mut inbound: Inbound) {
    while let Some((from, msg)) = inbound.recv().await {
        if shared.genesis.public_key_of(&from).is_none() {
            bump(&shared.stats.dropped_unknown_peer);
            tracing::debug!(%from, kind = msg.kind(), "dropped message from unknown peer");
            continue;
        }
        match msg {
            Message::Tx(tx) => {
                let _ = shared.input.send(Input::Tx {
                    tx,
                    origin: Some(from),
                    reply: None,
                });
            }
            Message::Block(block) => {
                let _ = shared.input.send(Input::Block {
                    block,
                    origin: from,
                });
            }
            Message::Blocks(blocks) => {
                let _ = shared.input.send(Input::Blocks {
                    blocks,
                    origin: from,
                });
            }
            Message::GetBlocks { from: lo, to } => {
                let blocks: Vec<Block> = {
                    let chain = shared.chain.read();
                    let hi = to
                        .min(chain.height())
                        .min(lo.saturating_add(SYNC_BATCH - 1));
                    (lo..=hi)
                        .filter_map(|h| chain.ledger().block(h).cloned())
                        .collect()
                };
                if !blocks.is_empty() {
                    shared.transport.send(&from, Message::Blocks(blocks));
                }
            }
            Message::BlobPush { id, bytes } => {
                if let Err(e) = shared.blobs.put_verified(&id, &bytes, true) {
                    if matches!(e, StoreError::Integrity(_)) {
                        bump(&shared.stats.blob_integrity_failures);
                    }
                    tracing::warn!(%from, %id, error = %e, "replica push refused");
                }
            }
            Message::BlobRequest { req_id, id } => {
                let bytes = shared.blobs.get(&id).ok();
                shared
                    .transport
                    .send(&from, Message::BlobResponse { req_id, id, bytes });
            }
            Message::BlobResponse { req_id, bytes, .. } => {
                if let Some(w) = shared.blob_waiters.lock().get(&req_id) {
                    let _ = w.send(bytes);
                }
            }
            Message::Hello { .. } | Message::Auth { .. } => {}
        }
    }
}

impl Shared {
    fn me(&self) -> Address {
        self.wallet.address()
    }

    fn broadcast(&self, msg: &Message, except: Option<Address>) {
        for peer in self.transport.peers() {
            if Some(peer) != except {
                self.transport.send(&peer, msg.clone());
            }
        }
    }

    fn ingest_tx(&self, tx: Transaction, origin: Option<Address>) -> Result<(), TxRejection> {
        let id = tx.tx_id();
        if self.pool.lock().contains(&id) {
            return Ok(());
        }
        {
            let chain = self.chain.read();
            if chain.locate(&id).is_some() {
                return Ok(());
            }
            let state = chain.state();
            check_signature(&tx, state)?;
            let expected = state.nonce_of(&tx.sender());
            if tx.nonce() < expected {
                return Err(TxRejection::BadNonce {
                    expected,
                    got: tx.nonce(),
                });
            }
            let required = intrinsic_gas(&tx.body, &self.genesis.gas_schedule);
            if tx.body.gas_limit < required {
                return Err(TxRejection::GasTooLow {
                    required,
                    limit: tx.body.gas_limit,
                });
            }
        }
        if !self.seen_txs.lock().insert(id) {
            return Ok(());
        }
        self.pool.lock().insert(tx.clone(), self.clock.now_ms());
        self.broadcast(&Message::Tx(tx), origin);
        Ok(())
    }

    fn request_blocks(&self, from_peer: Address) {
        let from = self.chain.read().height() + 1;
        self.transport.send(
            &from_peer,
            Message::GetBlocks {
                from,
                to: from + SYNC_BATCH - 1,
            },
        );
    }

    fn ingest_block(&self, block: Block, origin: Address) {
        let hash = block.hash();
        if self.seen_blocks.lock().contains(&hash) {
            bump(&self.stats.duplicate_blocks);
            return;
        }
        let tip = self.chain.read().height();
        if block.height() <= tip {
            bump(&self.stats.duplicate_blocks);
            return;
        }
        if block.height() > tip + 1 {
            self.best_seen.fetch_max(block.height(), Ordering::Relaxed);
            self.request_blocks(origin);
            return;
        }
        self.seen_blocks.lock().insert(hash);
        if self.apply_block(block.clone()) {
            self.broadcast(&Message::Block(block), Some(origin));
        }
    }

    fn ingest_blocks(&self, mut blocks: Vec<Block>, origin: Address) {
        blocks.sort_by_key(Block::height);
        for block in blocks {
            let tip = self.chain.read().height();
            if block.height() <= tip {
                continue;
            }
            if block.height() > tip + 1 {
                break;
            }
            self.seen_blocks.lock().insert(block.hash());
            if !self.apply_block(block) {
                break;
            }
        }
        if self.best_seen.load(Ordering::Relaxed) > self.chain.read().height() {
            self.request_blocks(origin);
        }
    }

    fn apply_block(&self, block: Block) -> bool {
        let height = block.height();
        let result = self.chain.write().accept_block(block).map(|_| ());
        match result {
            Ok(()) => {
                self.after_commit(height);
                true
            }
            Err(e) => {
                bump(&self.stats.rejected_blocks);
                tracing::warn!(height, error = %e, "block rejected");
                false
            }
        }
    }

    /// Persists the new tip, settles the pool and wakes subscribers.
    fn after_commit(&self, height: u64) {
        bump(&self.stats.blocks_applied);
        self.best_seen.fetch_max(height, Ordering::Relaxed);
        let chain = self.chain.read();
        if let Err(e) = self.segments.lock().sync_from(chain.ledger()) {
            tracing::error!(error = %e, "persisting block failed");
        }
        let mut pool = self.pool.lock();
        if let Some(block) = chain.ledger().block(height) {
            for id in block.tx_ids() {
                pool.remove(&id);
            }
        }
        let dead = pool.prune(chain.state());
        drop(pool);
        drop(chain);
        if !dead.is_empty() {
            self.rejects.lock().extend(dead);
        }
        self.height.send_replace(height);
    }

    fn on_slot(&self, slot: u64) {
        let vset = self.genesis.validator_set().expect("checked at start");
        if proposer_for_slot(&vset, slot) != self.me() {
            return;
        }
        let pending = self.pool.lock().ordered();
        let proposal = {
            let chain = self.chain.read();
            if slot <= chain.tip_slot() {
                return;
            }
            match chain.propose(&pending, slot, self.wallet.keypair()) {
                Ok(p) => p,
                Err(e) => {
                    tracing::warn!(slot, error = %e, "cannot propose");
                    return;
                }
            }
        };
        {
            let mut pool = self.pool.lock();
            let mut rejects = self.rejects.lock();
            for r in &proposal.rejected {
                pool.remove(&r.tx_id);
                rejects.insert(r.tx_id, r.reason.clone());
            }
        }
        let block = proposal.block.clone();
        let height = block.height();
        self.seen_blocks.lock().insert(block.hash());
        self.chain.write().commit_proposal(proposal);
        bump(&self.stats.blocks_proposed);
        tracing::debug!(
            height,
            slot,
            txs = block.transactions.len(),
            "proposed block"
        );
        self.after_commit(height);
        self.broadcast(&Message::Block(block), None);
    }
}

impl NodeHandle {
    pub fn address(&self) -> Address {
        self.shared.me()
    }

    pub fn genesis(&self) -> &Genesis {
        &self.shared.genesis
    }

    pub fn clock(&self) -> Clock {
        self.shared.clock
    }

    pub fn stats(&self) -> &Stats {
        &self.shared.stats
    }

    pub fn is_validator(&self) -> bool {
        self.shared.role == Role::Validator
    }

    /// Runs `f` against the committed chain under the read lock.
    pub fn with_chain<R>(&self, f: impl FnOnce(&Chain) -> R) -> R {
        f(&self.shared.chain.read())
    }

    pub fn height(&self) -> u64 {
        self.shared.chain.read().height()
    }

    /// (height, block hash, state root) of the tip.
    pub fn tip(&self) -> (u64, BlockHash, proml_core::Hash32) {
        let chain = self.shared.chain.read();
        (chain.height(), chain.tip_hash(), chain.state_root())
    }

    pub fn subscribe_height(&self) -> watch::Receiver<u64> {
        self.shared.height.subscribe()
    }

    /// Waits until the tip reaches `height`.
    pub async fn wait_for_height(&self, height: u64) {
        let mut rx = self.subscribe_height();
        let _ = rx.wait_for(|h| *h >= height).await;
    }

    pub fn pool_contains(&self, id: &TxId) -> bool {
        self.shared.pool.lock().contains(id)
    }

    pub fn pool_len(&self) -> usize {
        self.shared.pool.lock().len()
    }

    pub fn rejection(&self, id: &TxId) -> Option<TxRejection> {
        self.shared.rejects.lock().get(id).cloned()
    }

    pub fn peers(&self) -> Vec<Address> {
        self.shared.transport.peers()
    }

    /// Queues an already-signed transaction as if it arrived locally.
    pub async fn submit_transaction(&self, tx: Transaction) -> Result<(), TxRejection> {
        let (reply, rx) = oneshot::channel();
        if self
            .shared
            .input
            .send(Input::Tx {
                tx,
                origin: None,
                reply: Some(reply),
            })
            .is_err()
        {
            return Err(TxRejection::BadSignature);
        }
        rx.await.unwrap_or(Err(TxRejection::BadSignature))
    }

    pub fn blobs(&self) -> &BlobStore {
        &self.shared.blobs
    }

    /// Stores, pins and replicates `bytes` to the next validators in ring
    /// order after this node.
    pub fn put_blob(&self, bytes: &[u8]) -> Result<ContentId, StoreError> {
        let id = self.shared.blobs.put(bytes)?;
        let validators: Vec<Address> = self
            .shared
            .genesis
            .validators
            .iter()
            .map(|v| v.address)
            .collect();
        let me = self.address();
        let start = validators
            .iter()
            .position(|a| *a == me)
            .map_or(0, |p| p + 1);
        let copies = self.shared.replication_factor.saturating_sub(1);
        let targets = (0..validators.len())
            .map(|i| validators[(start + i) % validators.len()])
            .filter(|a| *a != me)
            .take(copies);
        for to in targets {
            self.shared.transport.send(
                &to,
                Message::BlobPush {
                    id,
                    bytes: bytes.to_vec(),
                },
            );
        }
        Ok(id)
    }

    /// Local copy if present, else the first verified copy from a peer.
    pub async fn get_blob(&self, id: &ContentId) -> Result<Vec<u8>, StoreError> {
        match self.shared.blobs.get(id) {
            Ok(bytes) => return Ok(bytes),
            Err(StoreError::NotFound | StoreError::Integrity(_)) => {}
            Err(e) => return Err(e),
        }
        let peers = self.peers();
        let (tx, mut rx) = mpsc::unbounded_channel();
        let mut req_ids = Vec::new();
        for peer in &peers {
            let req_id = self.shared.next_req.fetch_add(1, Ordering::Relaxed);
            self.shared.blob_waiters.lock().insert(req_id, tx.clone());
            req_ids.push(req_id);
            self.shared
                .transport
                .send(peer, Message::BlobRequest { req_id, id: *id });
        }
        drop(tx);
        let deadline = tokio::time::Instant::now() + self.shared.blob_fetch_timeout;
        let mut discarded = 0;
        let mut found = None;
        for _ in 0..peers.len() {
            match tokio::time::timeout_at(deadline, rx.recv()).await {
                Ok(Some(Some(bytes))) => {
                    if verify_artifact(&bytes, id) == Verification::Match {
                        found = Some(bytes);
                        break;
                    }
                    bump(&self.shared.stats.blob_integrity_failures);
                    discarded += 1;
                }
                Ok(Some(None)) => {}
                Ok(None) | Err(_) => break,
            }
        }
        {
            let mut waiters = self.shared.blob_waiters.lock();
            for r in req_ids {
                waiters.remove(&r);
            }
        }
        match found {
            Some(bytes) => {
                if let Err(e) = self.shared.blobs.put_verified(id, &bytes, false) {
                    tracing::warn!(%id, error = %e, "caching fetched blob failed");
                }
                Ok(bytes)
            }
            None if discarded > 0 => {
                Err(proml_core::offchain::IntegrityError { expected: *id }.into())
            }
            None => Err(StoreError::NotFound),
        }
    }
}
