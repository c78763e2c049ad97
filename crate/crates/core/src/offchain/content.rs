//! Content identifiers anchoring off-chain payloads to on-chain records.

use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codec::{Decode, Decoder, Encode, Encoder, EncodingError};
use crate::hash::{sha256, Hash32};

/// SHA-256 of a blob together with its length.
///
/// Serialized as the `<hash>:<size>` string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContentId {
    pub hash: Hash32,
    pub size: u64,
}

impl ContentId {
    pub fn of(blob: &[u8]) -> ContentId {
        ContentId {
            hash: sha256(blob),
            size: blob.len() as u64,
        }
    }

    /// Streams `reader` to compute its id without buffering it whole.
    pub fn of_reader<R: Read>(mut reader: R) -> std::io::Result<ContentId> {
        let mut hasher = Sha256::new();
        let mut buf = [0u8; 64 * 1024];
        let mut size = 0u64;
        loop {
            let n = reader.read(&mut buf)?;
            if n == 0 {
                break;
            }
            hasher.update(&buf[..n]);
            size += n as u64;
        }
        Ok(ContentId {
            hash: Hash32(hasher.finalize().into()),
            size,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.hash.is_zero()
    }

    /// File name used in the content directory.
    pub fn file_name(&self) -> String {
        self.hash.to_hex()
    }
}

impl fmt::Display for ContentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.hash, self.size)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("content id must look like <64 hex chars>:<size>")]
pub struct ParseContentIdError;

impl FromStr for ContentId {
    type Err = ParseContentIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (hash, size) = s.split_once(':').ok_or(ParseContentIdError)?;
        Ok(ContentId {
            hash: hash.parse().map_err(|_| ParseContentIdError)?,
            size: size.parse().map_err(|_| ParseContentIdError)?,
        })
    }
}

impl Serialize for ContentId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ContentId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse()
            .map_err(|_| serde::de::Error::custom(format!("bad content id {s:?}")))
    }
}

impl Encode for ContentId {
    fn encode(&self, enc: &mut Encoder) {
        enc.put_hash(&self.hash).put_u64(self.size);
    }
}

impl Decode for ContentId {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, EncodingError> {
        Ok(ContentId {
            hash: dec.get_hash("content.hash")?,
            size: dec.get_u64()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verification {
    Match,
    Mismatch,
}

/// Compares a blob against its anchor by hash and length.
pub fn verify_artifact(blob: &[u8], anchor: &ContentId) -> Verification {
    if blob.len() as u64 == anchor.size && sha256(blob) == anchor.hash {
        Verification::Match
    } else {
        Verification::Mismatch
    }
}
