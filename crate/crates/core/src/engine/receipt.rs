//! Execution receipts and emitted events.

use serde::{Deserialize, Serialize};

use crate::codec::{Decode, Decoder, Encode, Encoder, EncodingError};
use crate::hash::{sha256, Address, Hash32, TxId};

/// Why a contract call was reverted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, thiserror::Error)]
#[serde(rename_all = "snake_case")]
pub enum RevertReason {
    #[error("out of gas")]
    OutOfGas,
    #[error("no such contract")]
    NoSuchContract,
    #[error("no such method")]
    NoSuchMethod,
    #[error("bad init arguments")]
    BadInit,
    #[error("malformed call arguments")]
    BadArgs,
    #[error("unknown ancestor dataset")]
    UnknownAncestor,
    #[error("payload too large")]
    PayloadTooLarge,
    #[error("sender is not the asset owner")]
    NotOwner,
    #[error("anchor is zero")]
    BadAnchor,
    #[error("asset is not in a publishable stage")]
    NotPublishable,
    #[error("asset already published")]
    AlreadyPublished,
    #[error("contract address already in use")]
    AddressCollision,
}

impl RevertReason {
    const ALL: [RevertReason; 12] = [
        RevertReason::OutOfGas,
        RevertReason::NoSuchContract,
        RevertReason::NoSuchMethod,
        RevertReason::BadInit,
        RevertReason::BadArgs,
        RevertReason::UnknownAncestor,
        RevertReason::PayloadTooLarge,
        RevertReason::NotOwner,
        RevertReason::BadAnchor,
        RevertReason::NotPublishable,
        RevertReason::AlreadyPublished,
        RevertReason::AddressCollision,
    ];

    fn tag(self) -> u64 {
        Self::ALL.iter().position(|r| *r == self).expect("listed") as u64
    }

    fn from_tag(tag: u64) -> Option<Self> {
        Self::ALL.get(usize::try_from(tag).ok()?).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum ExecStatus {
    Success,
    Reverted(RevertReason),
}

impl ExecStatus {
    pub fn is_success(&self) -> bool {
        matches!(self, ExecStatus::Success)
    }
}

/// A log entry emitted during execution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub emitter: Address,
    pub name: String,
    #[serde(with = "hex_payload")]
    pub payload: Vec<u8>,
    pub block_height: u64,
    pub tx_id: TxId,
}

impl Event {
    /// Merkle leaf for the block's event root.
    pub fn leaf_hash(&self) -> Hash32 {
        sha256(&self.encode_to_vec())
    }
}

impl Encode for Event {
    fn encode(&self, enc: &mut Encoder) {
        enc.put_address(&self.emitter)
            .put_str(&self.name)
            .put_bytes(&self.payload)
            .put_u64(self.block_height)
            .put_hash(&self.tx_id);
    }
}

impl Decode for Event {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, EncodingError> {
        Ok(Event {
            emitter: dec.get_address("emitter")?,
            name: dec.get_str("event.name")?,
            payload: dec.get_bytes()?.to_vec(),
            block_height: dec.get_u64()?,
            tx_id: dec.get_hash("tx_id")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub tx_id: TxId,
    pub status: ExecStatus,
    pub gas_used: u64,
    pub events: Vec<Event>,
    pub new_contract: Option<Address>,
}

impl Encode for Receipt {
    fn encode(&self, enc: &mut Encoder) {
        enc.put_hash(&self.tx_id);
        match self.status {
            ExecStatus::Success => enc.put_u64(0),
            ExecStatus::Reverted(r) => enc.put_u64(1 + r.tag()),
        };
        enc.put_u64(self.gas_used)
            .put_list(&self.events)
            .put_opt_address(self.new_contract.as_ref());
    }
}

impl Decode for Receipt {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, EncodingError> {
        let tx_id = dec.get_hash("tx_id")?;
        let status = match dec.get_u64()? {
            0 => ExecStatus::Success,
            tag => ExecStatus::Reverted(RevertReason::from_tag(tag - 1).ok_or(
                EncodingError::BadTag {
                    field: "status",
                    tag,
                },
            )?),
        };
        Ok(Receipt {
            tx_id,
            status,
            gas_used: dec.get_u64()?,
            events: dec.get_list()?,
            new_contract: dec.get_opt_address("new_contract")?,
        })
    }
}

mod hex_payload {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        hex::decode(String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}
