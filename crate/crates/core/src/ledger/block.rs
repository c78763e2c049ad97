//! Block headers and blocks.

use serde::{Deserialize, Serialize};

use crate::codec::{Decode, Decoder, Encode, Encoder, EncodingError};
use crate::crypto::{Keypair, Signature};
use crate::hash::{sha256, Address, BlockHash, Hash32, TxId};
use crate::ledger::tx::Transaction;
use crate::merkle::merkle_root;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockHeader {
    pub height: u64,
    pub parent_hash: BlockHash,
    pub tx_root: Hash32,
    pub state_root: Hash32,
    pub event_root: Hash32,
    /// Seconds since the Unix epoch; always the start of the block's slot.
    pub timestamp: u64,
    pub proposer: Address,
}

impl BlockHeader {
    pub fn hash(&self) -> BlockHash {
        sha256(&self.encode_to_vec())
    }
}

impl Encode for BlockHeader {
    fn encode(&self, enc: &mut Encoder) {
        enc.put_u64(self.height)
            .put_hash(&self.parent_hash)
            .put_hash(&self.tx_root)
            .put_hash(&self.state_root)
            .put_hash(&self.event_root)
            .put_u64(self.timestamp)
            .put_address(&self.proposer);
    }
}

impl Decode for BlockHeader {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, EncodingError> {
        Ok(BlockHeader {
            height: dec.get_u64()?,
            parent_hash: dec.get_hash("parent_hash")?,
            tx_root: dec.get_hash("tx_root")?,
            state_root: dec.get_hash("state_root")?,
            event_root: dec.get_hash("event_root")?,
            timestamp: dec.get_u64()?,
            proposer: dec.get_address("proposer")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub header: BlockHeader,
    pub proposer_signature: Signature,
    pub transactions: Vec<Transaction>,
}

impl Block {
    pub fn hash(&self) -> BlockHash {
        self.header.hash()
    }

    pub fn height(&self) -> u64 {
        self.header.height
    }

    pub fn tx_ids(&self) -> Vec<TxId> {
        self.transactions.iter().map(Transaction::tx_id).collect()
    }

    pub fn compute_tx_root(&self) -> Hash32 {
        merkle_root(&self.tx_ids())
    }

    /// Signs the header in place with the proposer key.
    pub fn seal(&mut self, key: &Keypair) {
        self.proposer_signature = key.sign(&self.header.encode_to_vec());
    }
}

impl Encode for Block {
    fn encode(&self, enc: &mut Encoder) {
        enc.put_nested(&self.header)
            .put_bytes(&self.proposer_signature.0)
            .put_list(&self.transactions);
    }
}

impl Decode for Block {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, EncodingError> {
        Ok(Block {
            header: dec.get_nested()?,
            proposer_signature: dec.get_signature("proposer_signature")?,
            transactions: dec.get_list()?,
        })
    }
}
