//! Read-only views over the committed chain.

use std::time::Duration;

use proml_core::contracts::{
    assets_for_participant, history, AssetView, ProvenanceEvent, ProvenanceRecord, QueryError,
};
use proml_core::{Address, TxId};

use crate::node::NodeHandle;
use crate::types::{AssetList, BlockView, EventView, EventsPage, NodeStatus, TxStatus};

/// Longest a caller may park on the events endpoint.
pub const MAX_POLL: Duration = Duration::from_secs(60);

impl NodeHandle {
    pub fn status(&self) -> NodeStatus {
        let peers = self.peers().len();
        let pending = self.pool_len();
        self.with_chain(|c| NodeStatus {
            address: self.address(),
            chain_id: c.genesis().chain_id.clone(),
            validator: self.is_validator(),
            height: c.height(),
            tip_hash: c.tip_hash(),
            state_root: c.state_root(),
            tip_timestamp: c.tip().header.timestamp,
            genesis_time: c.genesis().genesis_time,
            block_interval_seconds: c.genesis().block_interval_seconds,
            peers,
            pending,
        })
    }

    pub fn tx_status(&self, id: &TxId) -> TxStatus {
        let pending = self.pool_contains(id);
        let rejected = self.rejection(id);
        self.with_chain(|c| {
            let Some(loc) = c.locate(id) else {
                return TxStatus {
                    tx_id: *id,
                    included: false,
                    pending,
                    height: None,
                    confirmations: 0,
                    timestamp: None,
                    receipt: None,
                    rejected,
                    accepted_transition: None,
                };
            };
            let receipt = c.receipt(id).cloned();
            let accepted_transition = receipt.as_ref().and_then(|r| {
                r.events
                    .iter()
                    .filter_map(|e| ProvenanceEvent::decode(e).ok().flatten())
                    .find_map(|e| match e {
                        ProvenanceEvent::StageAdvanced { .. } => Some(true),
                        ProvenanceEvent::OutOfOrderActivity { .. } => Some(false),
                        _ => None,
                    })
            });
            TxStatus {
                tx_id: *id,
                included: true,
                pending: false,
                height: Some(loc.height),
                confirmations: c.confirmations_of(id),
                timestamp: c.ledger().block(loc.height).map(|b| b.header.timestamp),
                receipt,
                rejected: None,
                accepted_transition,
            }
        })
    }

    pub fn asset(&self, address: &Address) -> Result<AssetView, QueryError> {
        self.with_chain(|c| AssetView::load(c.state(), address))
    }

    pub fn history(&self, address: &Address) -> Result<Vec<ProvenanceRecord>, QueryError> {
        self.with_chain(|c| history(c.state(), address).map(<[_]>::to_vec))
    }

    pub fn assets_of(&self, participant: &Address) -> AssetList {
        let assets = self
            .with_chain(|c| assets_for_participant(c.state(), &c.registry_address(), participant));
        AssetList {
            participant: *participant,
            assets,
        }
    }

    pub fn block_view(&self, height: u64) -> Option<BlockView> {
        self.with_chain(|c| {
            let block = c.ledger().block(height)?.clone();
            Some(BlockView {
                hash: block.hash(),
                receipts: c.ledger().receipts(height)?.to_vec(),
                block,
            })
        })
    }

    /// Events of blocks from `from_height` up to the tip. If there are none
    /// yet, waits up to `timeout` for the next block.
    pub async fn events(&self, from_height: u64, timeout: Duration) -> EventsPage {
        let mut rx = self.subscribe_height();
        let from_height = from_height.max(1);
        if *rx.borrow() < from_height {
            let wait = rx.wait_for(|h| *h >= from_height);
            let _ = tokio::time::timeout(timeout.min(MAX_POLL), wait).await;
        }
        self.with_chain(|c| {
            let mut events = Vec::new();
            for h in from_height..=c.height() {
                for r in c.ledger().receipts(h).unwrap_or_default() {
                    for e in &r.events {
                        events.push(EventView {
                            height: h,
                            tx_id: e.tx_id,
                            emitter: e.emitter,
                            name: e.name.clone(),
                            event: ProvenanceEvent::decode(e).ok().flatten(),
                        });
                    }
                }
            }
            EventsPage {
                events,
                next_height: c.height().max(from_height - 1) + 1,
            }
        })
    }
}
