//! Length-prefixed frames over TCP. Each link starts with a mutual
//! challenge-response so a peer is known by its genesis key, not its IP.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use parking_lot::Mutex;
use proml_core::{Address, Decode, Encode, Genesis, PublicKey};
use rand::RngCore;
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::tcp::{OwnedReadHalf, OwnedWriteHalf};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc;

use super::{Inbound, Transport};
use crate::messages::Message;
use crate::wallet::Wallet;

/// Largest accepted frame: a maximal blob plus headroom for its envelope.
pub const MAX_FRAME: u32 = (1 << 30) + (1 << 20);

const HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(10);
const REDIAL_DELAY: Duration = Duration::from_secs(1);

#[derive(Debug, thiserror::Error)]
enum LinkError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("frame of {0} bytes exceeds limit")]
    FrameTooLarge(u32),
    #[error("malformed handshake")]
    Handshake,
    #[error("peer key is not in the genesis allowlist")]
    UnknownPeer,
    #[error("peer failed the challenge")]
    BadAuth,
    #[error("handshake timed out")]
    Timeout,
}

struct Shared {
    wallet: Arc<Wallet>,
    chain_id: String,
    allowlist: HashMap<Address, PublicKey>,
    peers: Mutex<HashMap<Address, (u64, mpsc::UnboundedSender<Message>)>>,
    next_conn: AtomicU64,
    inbound: mpsc::UnboundedSender<(Address, Message)>,
}

pub struct TcpTransport {
    shared: Arc<Shared>,
    local_addr: SocketAddr,
}

async fn read_frame(r: &mut OwnedReadHalf) -> Result<Option<Vec<u8>>, LinkError> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len).await {
        Ok(_) => {}
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let len = u32::from_be_bytes(len);
    if len > MAX_FRAME {
        return Err(LinkError::FrameTooLarge(len));
    }
    let mut buf = vec![0u8; len as usize];
    r.read_exact(&mut buf).await?;
    Ok(Some(buf))
}

async fn write_frame(w: &mut OwnedWriteHalf, msg: &Message) -> Result<(), LinkError> {
    let bytes = msg.encode_to_vec();
    let len = u32::try_from(bytes.len())
        .ok()
        .filter(|l| *l <= MAX_FRAME)
        .ok_or(LinkError::FrameTooLarge(u32::MAX))?;
    w.write_all(&len.to_be_bytes()).await?;
    w.write_all(&bytes).await?;
    Ok(())
}

fn auth_message(challenge: &[u8; 32], chain_id: &str) -> Vec<u8> {
    let mut m = challenge.to_vec();
    m.extend_from_slice(chain_id.as_bytes());
    m
}

impl Shared {
    async fn handshake(
        &self,
        r: &mut OwnedReadHalf,
        w: &mut OwnedWriteHalf,
    ) -> Result<Address, LinkError> {
        let mut challenge = [0u8; 32];
        rand::thread_rng().fill_bytes(&mut challenge);
        write_frame(
            w,
            &Message::Hello {
                public_key: self.wallet.public_key(),
                challenge,
            },
        )
        .await?;
        let hello = read_frame(r).await?.ok_or(LinkError::Handshake)?;
        let Ok(Message::Hello {
            public_key,
            challenge: theirs,
        }) = Message::decode_exact(&hello)
        else {
            return Err(LinkError::Handshake);
        };
        let peer = public_key.address();
        if self.allowlist.get(&peer) != Some(&public_key) || peer == self.wallet.address() {
            return Err(LinkError::UnknownPeer);
        }
        let signature = self.wallet.sign(&auth_message(&theirs, &self.chain_id));
        write_frame(w, &Message::Auth { signature }).await?;
        let auth = read_frame(r).await?.ok_or(LinkError::Handshake)?;
        let Ok(Message::Auth { signature }) = Message::decode_exact(&auth) else {
            return Err(LinkError::Handshake);
        };
        if !public_key.verify(&auth_message(&challenge, &self.chain_id), &signature) {
            return Err(LinkError::BadAuth);
        }
        Ok(peer)
    }

    /// Runs one connection until either side closes it.
    async fn run(self: Arc<Self>, stream: TcpStream) -> Result<(), LinkError> {
        stream.set_nodelay(true)?;
        let (mut r, mut w) = stream.into_split();
        let peer = tokio::time::timeout(HANDSHAKE_TIMEOUT, self.handshake(&mut r, &mut w))
            .await
            .map_err(|_| LinkError::Timeout)??;
        let conn = self.next_conn.fetch_add(1, Ordering::Relaxed);
        let (tx, mut rx) = mpsc::unbounded_channel::<Message>();
        self.peers.lock().insert(peer, (conn, tx));
        tracing::info!(%peer, "peer connected");
        let writer = tokio::spawn(async move {
            while let Some(msg) = rx.recv().await {
                if write_frame(&mut w, &msg).await.is_err() {
                    break;
                }
            }
        });
        let result = loop {
            match read_frame(&mut r).await {
                Ok(Some(frame)) => match Message::decode_exact(&frame) {
                    Ok(Message::Hello { .. } | Message::Auth { .. }) | Err(_) => {
                        tracing::warn!(%peer, "protocol error, frame dropped");
                    }
                    Ok(msg) => {
                        if self.inbound.send((peer, msg)).is_err() {
                            break Ok(());
                        }
                    }
                },
                Ok(None) => break Ok(()),
                Err(e) => break Err(e),
            }
        };
        writer.abort();
        let mut peers = self.peers.lock();
        if peers.get(&peer).map(|(c, _)| *c) == Some(conn) {
            peers.remove(&peer);
        }
        tracing::info!(%peer, "peer disconnected");
        result
    }
}

impl TcpTransport {
    /// Listens on `listen` and keeps dialling every address in `dial`.
    pub async fn start(
        wallet: Arc<Wallet>,
        genesis: &Genesis,
        listen: SocketAddr,
        dial: Vec<String>,
    ) -> std::io::Result<(Arc<TcpTransport>, Inbound)> {
        let listener = TcpListener::bind(listen).await?;
        let local_addr = listener.local_addr()?;
        let (inbound, rx) = mpsc::unbounded_channel();
        let allowlist = genesis
            .validators
            .iter()
            .map(|v| v.public_key)
            .chain(genesis.participants.iter().map(|p| p.public_key))
            .map(|k| (k.address(), k))
            .collect();
        let shared = Arc::new(Shared {
            wallet,
            chain_id: genesis.chain_id.clone(),
            allowlist,
            peers: Mutex::default(),
            next_conn: AtomicU64::new(0),
            inbound,
        });
        let accept = shared.clone();
        tokio::spawn(async move {
            loop {
                match listener.accept().await {
                    Ok((stream, from)) => {
                        let s = accept.clone();
                        tokio::spawn(async move {
                            if let Err(e) = s.run(stream).await {
                                tracing::debug!(%from, error = %e, "inbound link closed");
                            }
                        });
                    }
                    Err(e) => tracing::warn!(error = %e, "accept failed"),
                }
            }
        });
        for addr in dial {
            let s = shared.clone();
            tokio::spawn(async move {
                loop {
                    if let Ok(stream) = TcpStream::connect(&addr).await {
                        if let Err(e) = s.clone().run(stream).await {
                            tracing::debug!(%addr, error = %e, "outbound link closed");
                        }
                    }
                    tokio::time::sleep(REDIAL_DELAY).await;
                }
            });
        }
        Ok((Arc::new(TcpTransport { shared, local_addr }), rx))
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }
}

impl Transport for TcpTransport {
    fn send(&self, to: &Address, msg: Message) {
        if let Some((_, tx)) = self.shared.peers.lock().get(to) {
            let _ = tx.send(msg);
        }
    }

    fn peers(&self) -> Vec<Address> {
        self.shared.peers.lock().keys().copied().collect()
    }
}
