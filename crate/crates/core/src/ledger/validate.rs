use serde::{Deserialize, Serialize};

use crate::consensus::{proposer_for_slot, slot_of_timestamp};
use crate::engine::{execute_transactions, BlockContext, Execution, WorldState};
use crate::genesis::Genesis;
use crate::ledger::{Block, Ledger, TxRejection};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum InvalidReason {
    #[error("genesis block does not match the genesis file")]
    GenesisMismatch,
    #[error("parent hash mismatch")]
    ParentHashMismatch,
    #[error("height mismatch")]
    HeightMismatch,
    #[error("timestamp is not a slot boundary after the parent")]
    BadTimestamp,
    #[error("proposer is not scheduled for this slot")]
    WrongProposer,
    #[error("proposer signature does not verify")]
    BadProposerSignature,
    #[error("tx root mismatch")]
    TxRootMismatch,
    #[error("transaction {index} invalid: {rejection}")]
    InvalidTransaction {
        index: usize,
        rejection: TxRejection,
    },
    #[error("state root mismatch")]
    StateRootMismatch,
    #[error("event root mismatch")]
    EventRootMismatch,
    #[error("stored receipts differ from re-execution")]
    ReceiptMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid block at height {height}: {reason}")]
pub struct ChainInvalid {
    pub height: u64,
    pub reason: InvalidReason,
}

/// Checks `block` as the child of `parent` whose post-state is
/// `parent_state`, and returns its execution.
pub fn validate_block(
    genesis: &Genesis,
    parent: &Block,
    parent_state: &WorldState,
    block: &Block,
) -> Result<Execution, InvalidReason> {
    let header = &block.header;
    if header.parent_hash != parent.hash() {
        return Err(InvalidReason::ParentHashMismatch);
    }
    if header.height != parent.height() + 1 {
        return Err(InvalidReason::HeightMismatch);
    }
    let interval = genesis.block_interval_seconds;
    let slot = slot_of_timestamp(genesis.genesis_time, interval, header.timestamp)
        .ok_or(InvalidReason::BadTimestamp)?;
    if header.timestamp <= parent.header.timestamp {
        return Err(InvalidReason::BadTimestamp);
    }
    let vset = genesis
        .validator_set()
        .map_err(|_| InvalidReason::WrongProposer)?;
    let scheduled = proposer_for_slot(&vset, slot);
    if header.proposer != scheduled {
        return Err(InvalidReason::WrongProposer);
    }
    let key = genesis
        .public_key_of(&scheduled)
        .ok_or(InvalidReason::WrongProposer)?;
    if !key.verify(
        &crate::codec::canonical_encode(header),
        &block.proposer_signature,
    ) {
        return Err(InvalidReason::BadProposerSignature);
    }
    if header.tx_root != block.compute_tx_root() {
        return Err(InvalidReason::TxRootMismatch);
    }
    let ctx = BlockContext {
        height: header.height,
        timestamp: header.timestamp,
    };
    let exec = execute_transactions(
        parent_state,
        &block.transactions,
        &ctx,
        &genesis.exec_params(),
    )
    .map_err(|(index, rejection)| InvalidReason::InvalidTransaction { index, rejection })?;
    if exec.state_root != header.state_root {
        return Err(InvalidReason::StateRootMismatch);
    }
    if exec.event_root != header.event_root {
        return Err(InvalidReason::EventRootMismatch);
    }
    Ok(exec)
}

/// Replays the whole ledger from genesis. Returns the tip state, or the
/// first failing height and why.
pub fn validate_chain(genesis: &Genesis, ledger: &Ledger) -> Result<WorldState, ChainInvalid> {
    let invalid = |height: u64, reason| ChainInvalid { height, reason };
    let blocks = ledger.blocks();
    if blocks[0] != genesis.block() || !ledger.all_receipts()[0].is_empty() {
        return Err(invalid(0, InvalidReason::GenesisMismatch));
    }
    let mut state = genesis.initial_state();
    for (i, pair) in blocks.windows(2).enumerate() {
        let height = i as u64 + 1;
        let exec =
            validate_block(genesis, &pair[0], &state, &pair[1]).map_err(|r| invalid(height, r))?;
        if ledger.all_receipts()[i + 1] != exec.receipts {
            return Err(invalid(height, InvalidReason::ReceiptMismatch));
        }
        state = exec.state;
    }
    Ok(state)
}
