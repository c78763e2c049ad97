//! A validated ledger plus the state and indexes derived from it.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::codec::Encode;
use crate::consensus::{confirmation_depth, proposer_for_slot, slot_of_timestamp, slot_start};
use crate::crypto::{Keypair, Signature};
use crate::engine::{
    apply_transaction, exec::event_root, BlockContext, Event, Receipt, WorldState,
};
use crate::genesis::{Genesis, GenesisError};
use crate::hash::{Address, BlockHash, Hash32, TxId};
use crate::ledger::{
    check_signature, validate_block, validate_chain, Block, BlockHeader, ChainInvalid,
    InvalidReason, Ledger, Transaction, TxRejection,
};
use crate::merkle::merkle_root;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProposeError {
    #[error("slot {slot} belongs to {scheduled}")]
    NotYourSlot { slot: u64, scheduled: Address },
    #[error("unknown parent block")]
    UnknownParent,
    #[error("slot {0} is not after the parent block")]
    StaleSlot(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[serde(tag = "rejection", rename_all = "snake_case")]
pub enum BlockRejection {
    #[error("wrong proposer")]
    WrongProposer,
    #[error("parent is not the local tip")]
    BadParent,
    #[error("invalid contents: {0}")]
    InvalidContents(InvalidReason),
}

/// A transaction dropped while building a block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedTx {
    pub tx_id: TxId,
    pub reason: TxRejection,
}

#[derive(Debug, Clone)]
pub struct Proposal {
    pub block: Block,
    pub receipts: Vec<Receipt>,
    pub state: WorldState,
    /// Dropped for good; belongs in the reject log.
    pub rejected: Vec<RejectedTx>,
    /// Nonce is ahead of the sender's account; may fit a later block.
    pub deferred: Vec<Transaction>,
}

/// Builds and signs the child of `parent` for `slot`.
///
/// Pending transactions are taken in the given order. A transaction whose
/// nonce is ahead is retried after the others, so a sender's burst that
/// arrived out of order still lands in one block.
pub fn propose_block(
    genesis: &Genesis,
    parent: &Block,
    parent_state: &WorldState,
    pending: &[Transaction],
    slot: u64,
    key: &Keypair,
) -> Result<Proposal, ProposeError> {
    let vset = genesis.validator_set().expect("genesis validated at load");
    let scheduled = proposer_for_slot(&vset, slot);
    if key.address() != scheduled {
        return Err(ProposeError::NotYourSlot { slot, scheduled });
    }
    let timestamp = slot_start(genesis.genesis_time, genesis.block_interval_seconds, slot);
    if timestamp <= parent.header.timestamp {
        return Err(ProposeError::StaleSlot(slot));
    }
    let ctx = BlockContext {
        height: parent.height() + 1,
        timestamp,
    };
    let params = genesis.exec_params();
    let mut state = parent_state.clone();
    let mut included = Vec::new();
    let mut receipts = Vec::new();
    let mut rejected = Vec::new();
    let mut queue: Vec<Transaction> = pending.to_vec();
    loop {
        let mut deferred = Vec::new();
        let before = included.len();
        for tx in queue {
            if let Err(reason) = check_signature(&tx, &state) {
                rejected.push(RejectedTx {
                    tx_id: tx.tx_id(),
                    reason,
                });
                continue;
            }
            let expected = state.nonce_of(&tx.body.sender);
            if tx.body.nonce > expected {
                deferred.push(tx);
                continue;
            }
            match apply_transaction(&mut state, &tx, &ctx, &params) {
                Ok(receipt) => {
                    receipts.push(receipt);
                    included.push(tx);
                }
                Err(reason) => rejected.push(RejectedTx {
                    tx_id: tx.tx_id(),
                    reason,
                }),
            }
        }
        queue = deferred;
        if queue.is_empty() || included.len() == before {
            break;
        }
    }
    let tx_ids: Vec<TxId> = included.iter().map(Transaction::tx_id).collect();
    let mut block = Block {
        header: BlockHeader {
            height: ctx.height,
            parent_hash: parent.hash(),
            tx_root: merkle_root(&tx_ids),
            state_root: state.state_root(),
            event_root: event_root(&receipts),
            timestamp,
            proposer: scheduled,
        },
        proposer_signature: Signature::EMPTY,
        transactions: included,
    };
    block.seal(key);
    Ok(Proposal {
        block,
        receipts,
        state,
        rejected,
        deferred: queue,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxLocation {
    pub height: u64,
    pub index: usize,
}

/// Committed chain with its tip state and a transaction index.
#[derive(Debug, Clone)]
pub struct Chain {
    genesis: Genesis,
    ledger: Ledger,
    state: WorldState,
    tx_index: HashMap<TxId, TxLocation>,
}

impl Chain {
    pub fn new(genesis: Genesis) -> Result<Chain, GenesisError> {
        genesis.check()?;
        let ledger = Ledger::new(genesis.block());
        let state = genesis.initial_state();
        Ok(Chain {
            genesis,
            ledger,
            state,
            tx_index: HashMap::new(),
        })
    }

    /// Rebuilds from stored blocks, replaying every one of them.
    pub fn from_ledger(genesis: Genesis, ledger: Ledger) -> Result<Chain, ChainInvalid> {
        let state = validate_chain(&genesis, &ledger)?;
        let mut chain = Chain {
            genesis,
            ledger,
            state,
            tx_index: HashMap::new(),
        };
        for block in chain.ledger.blocks() {
            for (index, id) in block.tx_ids().into_iter().enumerate() {
                chain.tx_index.insert(
                    id,
                    TxLocation {
                        height: block.height(),
                        index,
                    },
                );
            }
        }
        Ok(chain)
    }

    pub fn genesis(&self) -> &Genesis {
        &self.genesis
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn height(&self) -> u64 {
        self.ledger.height()
    }

    pub fn tip(&self) -> &Block {
        self.ledger.tip()
    }

    pub fn tip_hash(&self) -> BlockHash {
        self.ledger.tip_hash()
    }

    pub fn state_root(&self) -> Hash32 {
        self.tip().header.state_root
    }

    pub fn registry_address(&self) -> Address {
        Genesis::registry_address()
    }

    /// Slot of the tip block; genesis sits in slot 0.
    pub fn tip_slot(&self) -> u64 {
        slot_of_timestamp(
            self.genesis.genesis_time,
            self.genesis.block_interval_seconds,
            self.tip().header.timestamp,
        )
        .unwrap_or(0)
    }

    pub fn propose(
        &self,
        pending: &[Transaction],
        slot: u64,
        key: &Keypair,
    ) -> Result<Proposal, ProposeError> {
        propose_block(&self.genesis, self.tip(), &self.state, pending, slot, key)
    }

    /// Appends `block` if it extends the tip and re-executes cleanly.
    pub fn accept_block(&mut self, block: Block) -> Result<&[Receipt], BlockRejection> {
        let tip = self.tip();
        if block.header.parent_hash != tip.hash() || block.height() != tip.height() + 1 {
            return Err(BlockRejection::BadParent);
        }
        let exec =
            validate_block(&self.genesis, tip, &self.state, &block).map_err(|r| match r {
                InvalidReason::WrongProposer | InvalidReason::BadProposerSignature => {
                    BlockRejection::WrongProposer
                }
                other => BlockRejection::InvalidContents(other),
            })?;
        self.commit(block, exec.receipts, exec.state);
        Ok(self.ledger.receipts(self.height()).expect("just pushed"))
    }

    /// Appends a block this node proposed itself.
    pub fn commit_proposal(&mut self, proposal: Proposal) -> &[Receipt] {
        assert_eq!(proposal.block.header.parent_hash, self.tip_hash());
        self.commit(proposal.block, proposal.receipts, proposal.state);
        self.ledger.receipts(self.height()).expect("just pushed")
    }

    fn commit(&mut self, block: Block, receipts: Vec<Receipt>, state: WorldState) {
        for (index, id) in block.tx_ids().into_iter().enumerate() {
            self.tx_index.insert(
                id,
                TxLocation {
                    height: block.height(),
                    index,
                },
            );
        }
        self.ledger.push(block, receipts);
        self.state = state;
    }

    pub fn locate(&self, tx_id: &TxId) -> Option<TxLocation> {
        self.tx_index.get(tx_id).copied()
    }

    pub fn transaction(&self, tx_id: &TxId) -> Option<&Transaction> {
        let loc = self.locate(tx_id)?;
        self.ledger.block(loc.height)?.transactions.get(loc.index)
    }

    pub fn receipt(&self, tx_id: &TxId) -> Option<&Receipt> {
        let loc = self.locate(tx_id)?;
        self.ledger.receipts(loc.height)?.get(loc.index)
    }

    /// 0 if not included, else tip height − inclusion height + 1.
    pub fn confirmations_of(&self, tx_id: &TxId) -> u64 {
        self.locate(tx_id)
            .map_or(0, |loc| confirmation_depth(loc.height, self.height()))
    }

    /// Events of blocks at `from_height` and above, in block order.
    pub fn events_from(&self, from_height: u64) -> impl Iterator<Item = &Event> {
        self.ledger
            .all_receipts()
            .iter()
            .skip(usize::try_from(from_height).unwrap_or(usize::MAX))
            .flatten()
            .flat_map(|r| r.events.iter())
    }

    /// Encoded size of the tip block; used for diagnostics.
    pub fn tip_size(&self) -> usize {
        self.tip().encoded_len()
    }
}
