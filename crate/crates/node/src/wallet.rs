//! Passphrase-encrypted signing key file.

use std::path::Path;

use argon2::{Algorithm, Argon2, Params, Version};
use chacha20poly1305::aead::{Aead, KeyInit};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use proml_core::crypto::{Keypair, PublicKey, Signature};
use proml_core::Address;
use rand::RngCore;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct KdfParams {
    #[serde(with = "hex::serde")]
    salt: Vec<u8>,
    m_cost: u32,
    t_cost: u32,
    p_cost: u32,
}

/// On-disk form. Only the public half is readable without the passphrase.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeyFile {
    pub address: Address,
    pub public_key: PublicKey,
    kdf: KdfParams,
    #[serde(with = "hex::serde")]
    nonce: Vec<u8>,
    #[serde(with = "hex::serde")]
    ciphertext: Vec<u8>,
}

#[derive(Debug, thiserror::Error)]
pub enum WalletError {
    #[error("key file io: {0}")]
    Io(#[from] std::io::Error),
    #[error("key file format: {0}")]
    Format(#[from] serde_json::Error),
    #[error("wrong passphrase or corrupted key file")]
    Decrypt,
    #[error("key derivation failed: {0}")]
    Kdf(String),
}

fn derive(passphrase: &str, kdf: &KdfParams) -> Result<Key, WalletError> {
    let params = Params::new(kdf.m_cost, kdf.t_cost, kdf.p_cost, Some(32))
        .map_err(|e| WalletError::Kdf(e.to_string()))?;
    let mut out = [0u8; 32];
    Argon2::new(Algorithm::Argon2id, Version::V0x13, params)
        .hash_password_into(passphrase.as_bytes(), &kdf.salt, &mut out)
        .map_err(|e| WalletError::Kdf(e.to_string()))?;
    Ok(Key::from(out))
}

impl KeyFile {
    pub fn seal(key: &Keypair, passphrase: &str) -> Result<KeyFile, WalletError> {
        let mut salt = vec![0u8; 16];
        let mut nonce = vec![0u8; 12];
        rand::thread_rng().fill_bytes(&mut salt);
        rand::thread_rng().fill_bytes(&mut nonce);
        let kdf = KdfParams {
            salt,
            m_cost: 19 * 1024,
            t_cost: 2,
            p_cost: 1,
        };
        let cipher = ChaCha20Poly1305::new(&derive(passphrase, &kdf)?);
        let ciphertext = cipher
            .encrypt(Nonce::from_slice(&nonce), key.seed().as_slice())
            .map_err(|_| WalletError::Decrypt)?;
        Ok(KeyFile {
            address: key.address(),
            public_key: key.public_key(),
            kdf,
            nonce,
            ciphertext,
        })
    }

    pub fn open(&self, passphrase: &str) -> Result<Keypair, WalletError> {
        let cipher = ChaCha20Poly1305::new(&derive(passphrase, &self.kdf)?);
        let seed = cipher
            .decrypt(Nonce::from_slice(&self.nonce), self.ciphertext.as_slice())
            .map_err(|_| WalletError::Decrypt)?;
        let seed: [u8; 32] = seed.try_into().map_err(|_| WalletError::Decrypt)?;
        let key = Keypair::from_seed(seed);
        if key.public_key() != self.public_key {
            return Err(WalletError::Decrypt);
        }
        Ok(key)
    }

    pub fn read(path: &Path) -> Result<KeyFile, WalletError> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }

    pub fn write(&self, path: &Path) -> Result<(), WalletError> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }
}

/// The node's identity. Signing happens here and the key never leaves.
pub struct Wallet {
    key: Keypair,
    lock: tokio::sync::Mutex<()>,
}

impl Wallet {
    pub fn new(key: Keypair) -> Self {
        Wallet {
            key,
            lock: tokio::sync::Mutex::new(()),
        }
    }

    pub fn unlock(path: &Path, passphrase: &str) -> Result<Wallet, WalletError> {
        Ok(Wallet::new(KeyFile::read(path)?.open(passphrase)?))
    }

    pub fn address(&self) -> Address {
        self.key.address()
    }

    pub fn public_key(&self) -> PublicKey {
        self.key.public_key()
    }

    pub fn sign(&self, message: &[u8]) -> Signature {
        self.key.sign(message)
    }

    pub(crate) fn keypair(&self) -> &Keypair {
        &self.key
    }

    /// Held while a nonce is chosen and the transaction submitted, so two
    /// requests never race for the same nonce.
    pub(crate) async fn serialize(&self) -> tokio::sync::MutexGuard<'_, ()> {
        self.lock.lock().await
    }
}

impl std::fmt::Debug for Wallet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Wallet")
            .field("address", &self.address())
            .finish_non_exhaustive()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seal_open_round_trip() {
        let key = Keypair::from_seed([9; 32]);
        let file = KeyFile::seal(&key, "correct horse").unwrap();
        assert_eq!(file.open("correct horse").unwrap().seed(), key.seed());
        assert!(matches!(file.open("wrong"), Err(WalletError::Decrypt)));
    }

    #[test]
    fn file_holds_no_plain_seed() {
        let key = Keypair::from_seed([9; 32]);
        let json = serde_json::to_string(&KeyFile::seal(&key, "pw").unwrap()).unwrap();
        assert!(!json.contains(&hex::encode(key.seed())));
        let back: KeyFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.address, key.address());
    }
}
