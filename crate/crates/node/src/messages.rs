//! Peer-to-peer messages in canonical encoding.

use proml_core::codec::{Decoder, Encoder};
use proml_core::ledger::{Block, Transaction};
use proml_core::offchain::ContentId;
use proml_core::{Decode, Encode, EncodingError, PublicKey, Signature};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    /// First frame on a TCP link: who I claim to be, and a challenge for you.
    Hello {
        public_key: PublicKey,
        challenge: [u8; 32],
    },
    /// Signature over the peer's challenge and the chain id.
    Auth {
        signature: Signature,
    },
    Tx(Transaction),
    Block(Block),
    GetBlocks {
        from: u64,
        to: u64,
    },
    Blocks(Vec<Block>),
    /// Replication push. The receiver verifies and pins.
    BlobPush {
        id: ContentId,
        bytes: Vec<u8>,
    },
    BlobRequest {
        req_id: u64,
        id: ContentId,
    },
    BlobResponse {
        req_id: u64,
        id: ContentId,
        bytes: Option<Vec<u8>>,
    },
}

impl Message {
    fn tag(&self) -> u64 {
        match self {
            Message::Hello { .. } => 0,
            Message::Auth { .. } => 1,
            Message::Tx(_) => 2,
            Message::Block(_) => 3,
            Message::GetBlocks { .. } => 4,
            Message::Blocks(_) => 5,
            Message::BlobPush { .. } => 6,
            Message::BlobRequest { .. } => 7,
            Message::BlobResponse { .. } => 8,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Message::Hello { .. } => "hello",
            Message::Auth { .. } => "auth",
            Message::Tx(_) => "tx",
            Message::Block(_) => "block",
            Message::GetBlocks { .. } => "get_blocks",
            Message::Blocks(_) => "blocks",
            Message::BlobPush { .. } => "blob_push",
            Message::BlobRequest { .. } => "blob_request",
            Message::BlobResponse { .. } => "blob_response",
        }
    }
}

impl Encode for Message {
    fn encode(&self, enc: &mut Encoder) {
        enc.put_u64(self.tag());
        match self {
            Message::Hello {
                public_key,
                challenge,
            } => {
                enc.put_bytes(public_key.as_bytes()).put_bytes(challenge);
            }
            Message::Auth { signature } => {
                enc.put_bytes(signature.as_bytes());
            }
            Message::Tx(tx) => {
                enc.put_nested(tx);
            }
            Message::Block(block) => {
                enc.put_nested(block);
            }
            Message::GetBlocks { from, to } => {
                enc.put_u64(*from).put_u64(*to);
            }
            Message::Blocks(blocks) => {
                enc.put_list(blocks);
            }
            Message::BlobPush { id, bytes } => {
                enc.put_nested(id).put_bytes(bytes);
            }
            Message::BlobRequest { req_id, id } => {
                enc.put_u64(*req_id).put_nested(id);
            }
            Message::BlobResponse { req_id, id, bytes } => {
                enc.put_u64(*req_id).put_nested(id);
                match bytes {
                    Some(b) => enc.put_u64(1).put_bytes(b),
                    None => enc.put_u64(0),
                };
            }
        }
    }
}

impl Decode for Message {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, EncodingError> {
        let tag = dec.get_u64()?;
        Ok(match tag {
            0 => Message::Hello {
                public_key: dec.get_public_key("public_key")?,
                challenge: dec.get_fixed::<32>("challenge")?,
            },
            1 => Message::Auth {
                signature: dec.get_signature("signature")?,
            },
            2 => Message::Tx(dec.get_nested()?),
            3 => Message::Block(dec.get_nested()?),
            4 => Message::GetBlocks {
                from: dec.get_u64()?,
                to: dec.get_u64()?,
            },
            5 => Message::Blocks(dec.get_list()?),
            6 => Message::BlobPush {
                id: dec.get_nested()?,
                bytes: dec.get_bytes()?.to_vec(),
            },
            7 => Message::BlobRequest {
                req_id: dec.get_u64()?,
                id: dec.get_nested()?,
            },
            8 => {
                let req_id = dec.get_u64()?;
                let id = dec.get_nested()?;
                let bytes = match dec.get_u64()? {
                    0 => None,
                    1 => Some(dec.get_bytes()?.to_vec()),
                    tag => {
                        return Err(EncodingError::BadTag {
                            field: "bytes",
                            tag,
                        })
                    }
                };
                Message::BlobResponse { req_id, id, bytes }
            }
            tag => {
                return Err(EncodingError::BadTag {
                    field: "message",
                    tag,
                })
            }
        })
    }
}
