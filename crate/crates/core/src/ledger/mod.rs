//! Blocks, transactions and the ordered ledger.

pub mod block;
pub mod tx;
pub mod validate;

pub use block::{Block, BlockHeader};
pub use tx::{
    check_signature, intrinsic_gas, sign_call, sign_transaction, verify_transaction, Call,
    SignError, Transaction, TransactionBuilder, TxRejection, UnsignedTransaction,
};
pub use validate::{validate_block, validate_chain, ChainInvalid, InvalidReason};

use crate::engine::Receipt;
use crate::hash::BlockHash;

/// Committed blocks from genesis to tip, each with the receipts produced
/// by executing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Ledger {
    blocks: Vec<Block>,
    receipts: Vec<Vec<Receipt>>,
}

impl Ledger {
    pub fn new(genesis: Block) -> Self {
        Ledger {
            blocks: vec![genesis],
            receipts: vec![Vec::new()],
        }
    }

    /// Builds a ledger from stored parts without checking them; run
    /// [`validate_chain`] before trusting the result.
    pub fn from_parts(blocks: Vec<Block>, receipts: Vec<Vec<Receipt>>) -> Self {
        assert!(!blocks.is_empty(), "ledger needs a genesis block");
        assert_eq!(blocks.len(), receipts.len());
        Ledger { blocks, receipts }
    }

    pub fn height(&self) -> u64 {
        self.blocks.len() as u64 - 1
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("non-empty")
    }

    pub fn tip_hash(&self) -> BlockHash {
        self.tip().hash()
    }

    pub fn block(&self, height: u64) -> Option<&Block> {
        self.blocks.get(usize::try_from(height).ok()?)
    }

    pub fn receipts(&self, height: u64) -> Option<&[Receipt]> {
        self.receipts
            .get(usize::try_from(height).ok()?)
            .map(Vec::as_slice)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn all_receipts(&self) -> &[Vec<Receipt>] {
        &self.receipts
    }

    pub fn blocks_mut(&mut self) -> &mut [Block] {
        &mut self.blocks
    }

    pub fn receipts_mut(&mut self) -> &mut [Vec<Receipt>] {
        &mut self.receipts
    }

    pub(crate) fn push(&mut self, block: Block, receipts: Vec<Receipt>) {
        debug_assert_eq!(block.height(), self.height() + 1);
        self.blocks.push(block);
        self.receipts.push(receipts);
    }
}
