//! A whole network in one process, linked by a [`Hub`]. Keys come from
//! labels, so every run of the same layout has the same addresses.
//!
//! Run it on a paused tokio clock to cover minutes of slots in
//! milliseconds.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use proml_core::genesis::{dev_network, DevNetwork};
use proml_core::{Address, BlockHash, Hash32, Keypair};

use crate::clock::Clock;
use crate::config::Role;
use crate::node::{Node, NodeError, NodeHandle, NodeParams};
use crate::transport::Hub;
use crate::wallet::Wallet;

pub const DEV_GENESIS_TIME: u64 = 1_700_000_000;

#[derive(Debug, Clone)]
pub struct DevNetOptions {
    pub validators: usize,
    /// Labels of extra participants; each runs an observer node.
    pub observers: Vec<String>,
    pub block_interval_seconds: u64,
    pub link_latency: Duration,
    pub replication_factor: usize,
    /// Offset of the clock at start from genesis, in milliseconds.
    pub start_offset_ms: u64,
    pub blob_fetch_timeout: Duration,
}

impl Default for DevNetOptions {
    fn default() -> Self {
        DevNetOptions {
            validators: 5,
            observers: Vec::new(),
            block_interval_seconds: 13,
            link_latency: Duration::from_millis(50),
            replication_factor: 2,
            start_offset_ms: 0,
            blob_fetch_timeout: Duration::from_secs(5),
        }
    }
}

pub struct DevNet {
    pub hub: Hub,
    pub net: DevNetwork,
    pub clock: Clock,
    opts: DevNetOptions,
    nodes: Vec<Option<Node>>,
    dirs: Vec<PathBuf>,
    _root: tempfile::TempDir,
}

impl DevNet {
    /// Starts every node. Must run inside a tokio runtime.
    pub fn start(opts: DevNetOptions) -> Result<DevNet, NodeError> {
        let labels: Vec<&str> = opts.observers.iter().map(String::as_str).collect();
        let net = dev_network(
            opts.validators,
            &labels,
            DEV_GENESIS_TIME,
            opts.block_interval_seconds,
        );
        let root = tempfile::tempdir().map_err(|e| NodeError::Store(e.into()))?;
        let count = opts.validators + opts.observers.len();
        let dirs = (0..count)
            .map(|i| root.path().join(format!("node-{i}")))
            .collect();
        let clock = Clock::starting_at(DEV_GENESIS_TIME * 1000 + opts.start_offset_ms);
        let mut dev = DevNet {
            hub: Hub::new(opts.link_latency),
            net,
            clock,
            opts,
            nodes: (0..count).map(|_| None).collect(),
            dirs,
            _root: root,
        };
        for i in 0..count {
            dev.start_node(i)?;
        }
        Ok(dev)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn key(&self, i: usize) -> &Keypair {
        let v = self.opts.validators;
        if i < v {
            &self.net.validator_keys[i]
        } else {
            &self.net.participant_keys[i - v]
        }
    }

    pub fn address(&self, i: usize) -> Address {
        self.key(i).address()
    }

    /// Handle of node `i`. Panics if it is stopped.
    pub fn node(&self, i: usize) -> NodeHandle {
        self.nodes[i].as_ref().expect("node is running").handle()
    }

    pub fn is_running(&self, i: usize) -> bool {
        self.nodes[i].is_some()
    }

    pub fn running(&self) -> Vec<NodeHandle> {
        self.nodes.iter().flatten().map(Node::handle).collect()
    }

    /// Cuts node `i` off the network and stops its tasks. Its data stays.
    pub fn stop(&mut self, i: usize) {
        self.hub.disconnect(&self.address(i));
        if let Some(node) = self.nodes[i].take() {
            node.shutdown();
        }
    }

    /// Starts node `i` again from its stored chain and blobs.
    pub fn start_node(&mut self, i: usize) -> Result<NodeHandle, NodeError> {
        let key = self.key(i).clone();
        let role = if i < self.opts.validators {
            Role::Validator
        } else {
            Role::Observer
        };
        let (transport, inbound) = self.hub.join(key.address());
        let mut params = NodeParams::new(
            self.net.genesis.clone(),
            Arc::new(Wallet::new(key)),
            role,
            self.dirs[i].clone(),
        );
        params.clock = self.clock;
        params.replication_factor = self.opts.replication_factor;
        params.blob_fetch_timeout = self.opts.blob_fetch_timeout;
        let node = Node::start(params, transport, inbound)?;
        let handle = node.handle();
        self.nodes[i] = Some(node);
        Ok(handle)
    }

    /// (height, block hash, state root) of every running node.
    pub fn tips(&self) -> Vec<(u64, BlockHash, Hash32)> {
        self.running().iter().map(NodeHandle::tip).collect()
    }

    pub fn converged(&self) -> bool {
        let tips = self.tips();
        tips.windows(2).all(|w| w[0] == w[1])
    }

    /// Waits until every running node reaches `height`.
    pub async fn wait_for_height(&self, height: u64) {
        for n in self.running() {
            n.wait_for_height(height).await;
        }
    }

    /// Milliseconds from now to the start of the next slot.
    pub fn ms_to_next_slot(&self) -> u64 {
        let interval = self.opts.block_interval_seconds * 1000;
        let since = self.clock.now_ms() - DEV_GENESIS_TIME * 1000;
        interval - since % interval
    }

    pub fn block_interval(&self) -> Duration {
        Duration::from_secs(self.opts.block_interval_seconds)
    }
}
