//! Provenance ledger for distributed machine-learning workflows.
//!
//! Datasets and models are contracts whose workflow stage advances as
//! participants report activities. Every report is a signed transaction
//! kept in a proof-of-authority chain; large payloads live in a
//! content-addressed blob store and are anchored on chain by hash.

pub mod chain;
pub mod codec;
pub mod consensus;
pub mod contracts;
pub mod crypto;
pub mod engine;
pub mod genesis;
pub mod hash;
pub mod ledger;
pub mod merkle;
pub mod offchain;
pub mod segment;

pub use chain::{BlockRejection, Chain, Proposal, ProposeError, RejectedTx, TxLocation};
pub use codec::{canonical_encode, Decode, Encode, EncodingError};
pub use crypto::{Keypair, PublicKey, Signature};
pub use genesis::Genesis;
pub use hash::{sha256, Address, BlockHash, Hash32, TxId};
