//! Signed transactions.

use serde::{Deserialize, Serialize};

use crate::codec::{Decode, Decoder, Encode, Encoder, EncodingError};
use crate::crypto::{Keypair, Signature};
use crate::engine::{GasSchedule, WorldState};
use crate::hash::{sha256, Address, TxId};

/// Operation name plus its encoded arguments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Call {
    pub method: String,
    #[serde(with = "hex_bytes")]
    pub args: Vec<u8>,
}

impl Call {
    pub fn new(method: impl Into<String>, args: Vec<u8>) -> Self {
        Call {
            method: method.into(),
            args,
        }
    }

    /// Bytes the call occupies inside a transaction encoding.
    pub fn payload_len(&self) -> u64 {
        (4 + self.method.len() + 4 + self.args.len()) as u64
    }

    fn encode_fields(&self, enc: &mut Encoder) {
        enc.put_str(&self.method).put_bytes(&self.args);
    }
}

/// A transaction before signing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnsignedTransaction {
    pub sender: Address,
    pub nonce: u64,
    /// `None` deploys a new contract.
    pub target: Option<Address>,
    pub call: Call,
    pub gas_limit: u64,
}

impl Encode for UnsignedTransaction {
    fn encode(&self, enc: &mut Encoder) {
        enc.put_address(&self.sender)
            .put_u64(self.nonce)
            .put_opt_address(self.target.as_ref());
        self.call.encode_fields(enc);
        enc.put_u64(self.gas_limit);
    }
}

impl Decode for UnsignedTransaction {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, EncodingError> {
        Ok(UnsignedTransaction {
            sender: dec.get_address("sender")?,
            nonce: dec.get_u64()?,
            target: dec.get_opt_address("target")?,
            call: Call {
                method: dec.get_str("call.method")?,
                args: dec.get_bytes()?.to_vec(),
            },
            gas_limit: dec.get_u64()?,
        })
    }
}

/// A signed transaction. The id is derived, never stored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    #[serde(flatten)]
    pub body: UnsignedTransaction,
    pub signature: Signature,
}

impl Transaction {
    pub fn tx_id(&self) -> TxId {
        sha256(&self.encode_to_vec())
    }

    pub fn sender(&self) -> Address {
        self.body.sender
    }

    pub fn nonce(&self) -> u64 {
        self.body.nonce
    }

    /// Bytes covered by the signature.
    pub fn signing_bytes(&self) -> Vec<u8> {
        self.body.encode_to_vec()
    }
}

impl Encode for Transaction {
    fn encode(&self, enc: &mut Encoder) {
        self.body.encode(enc);
        enc.put_bytes(&self.signature.0);
    }
}

impl Decode for Transaction {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, EncodingError> {
        Ok(Transaction {
            body: UnsignedTransaction::decode(dec)?,
            signature: dec.get_signature("signature")?,
        })
    }
}

/// Incrementally assembled transaction; encoding fails until every required
/// field has been set.
#[derive(Debug, Clone, Default)]
pub struct TransactionBuilder {
    sender: Option<Address>,
    nonce: Option<u64>,
    target: Option<Address>,
    call: Option<Call>,
    gas_limit: Option<u64>,
}

impl TransactionBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sender(mut self, sender: Address) -> Self {
        self.sender = Some(sender);
        self
    }

    pub fn nonce(mut self, nonce: u64) -> Self {
        self.nonce = Some(nonce);
        self
    }

    pub fn target(mut self, target: Address) -> Self {
        self.target = Some(target);
        self
    }

    pub fn call(mut self, call: Call) -> Self {
        self.call = Some(call);
        self
    }

    pub fn gas_limit(mut self, gas_limit: u64) -> Self {
        self.gas_limit = Some(gas_limit);
        self
    }

    pub fn build(self) -> Result<UnsignedTransaction, EncodingError> {
        Ok(UnsignedTransaction {
            sender: self.sender.ok_or(EncodingError::MissingField("sender"))?,
            nonce: self.nonce.ok_or(EncodingError::MissingField("nonce"))?,
            target: self.target,
            call: self.call.ok_or(EncodingError::MissingField("call"))?,
            gas_limit: self
                .gas_limit
                .ok_or(EncodingError::MissingField("gas_limit"))?,
        })
    }

    pub fn canonical_encode(self) -> Result<Vec<u8>, EncodingError> {
        self.build().map(|tx| tx.encode_to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SignError {
    #[error("signing key belongs to {key}, transaction sender is {sender}")]
    KeyMismatch { key: Address, sender: Address },
}

pub fn sign_transaction(tx: UnsignedTransaction, key: &Keypair) -> Result<Transaction, SignError> {
    let key_addr = key.address();
    if key_addr != tx.sender {
        return Err(SignError::KeyMismatch {
            key: key_addr,
            sender: tx.sender,
        });
    }
    let signature = key.sign(&tx.encode_to_vec());
    Ok(Transaction {
        body: tx,
        signature,
    })
}

/// Builds and signs a transaction from `key`'s account.
pub fn sign_call(
    key: &Keypair,
    nonce: u64,
    target: Option<Address>,
    call: Call,
    gas_limit: u64,
) -> Transaction {
    let body = UnsignedTransaction {
        sender: key.address(),
        nonce,
        target,
        call,
        gas_limit,
    };
    sign_transaction(body, key).expect("sender derived from key")
}

/// Why a transaction cannot be included against a given state.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum TxRejection {
    /// Signature does not verify, or the sender is not a known account.
    #[error("bad signature")]
    BadSignature,
    #[error("bad nonce: expected {expected}, got {got}")]
    BadNonce { expected: u64, got: u64 },
    #[error("gas limit {limit} below intrinsic gas {required}")]
    GasTooLow { required: u64, limit: u64 },
}

/// Gas charged before any contract code runs.
pub fn intrinsic_gas(tx: &UnsignedTransaction, schedule: &GasSchedule) -> u64 {
    schedule.tx_base.saturating_add(
        schedule
            .per_byte_payload
            .saturating_mul(tx.call.payload_len()),
    )
}

/// Checks signature, nonce and intrinsic gas against `state`.
pub fn verify_transaction(
    tx: &Transaction,
    state: &WorldState,
    schedule: &GasSchedule,
) -> Result<(), TxRejection> {
    check_signature(tx, state)?;
    let expected = state.nonce_of(&tx.body.sender);
    if tx.body.nonce != expected {
        return Err(TxRejection::BadNonce {
            expected,
            got: tx.body.nonce,
        });
    }
    let required = intrinsic_gas(&tx.body, schedule);
    if tx.body.gas_limit < required {
        return Err(TxRejection::GasTooLow {
            required,
            limit: tx.body.gas_limit,
        });
    }
    Ok(())
}

/// Signature-only check; used when admitting transactions whose nonce is
/// not yet current.
pub fn check_signature(tx: &Transaction, state: &WorldState) -> Result<(), TxRejection> {
    let account = state
        .account(&tx.body.sender)
        .ok_or(TxRejection::BadSignature)?;
    if account
        .public_key
        .verify(&tx.signing_bytes(), &tx.signature)
    {
        Ok(())
    } else {
        Err(TxRejection::BadSignature)
    }
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s).map_err(serde::de::Error::custom)
    }
}
