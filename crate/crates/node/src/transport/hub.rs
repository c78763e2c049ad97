//! In-process full mesh used by tests and the benchmark. Each directed
//! link delivers in FIFO order after a fixed delay, on tokio time.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;
use std::time::Duration;

use parking_lot::Mutex;
use proml_core::Address;
use tokio::sync::mpsc;
use tokio::time::Instant;

use super::{Inbound, Transport};
use crate::messages::Message;

/// Misbehaviour injected at a node's outgoing side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Flip a byte in every blob this node serves.
    CorruptBlobs,
}

#[derive(Default)]
struct HubInner {
    inboxes: HashMap<Address, mpsc::UnboundedSender<(Address, Message)>>,
    links: HashMap<(Address, Address), mpsc::UnboundedSender<(Instant, Message)>>,
    down: HashSet<Address>,
    faults: HashMap<Address, Fault>,
    tap: Option<mpsc::UnboundedSender<(Address, Address, Message)>>,
}

#[derive(Clone)]
pub struct Hub {
    latency: Duration,
    inner: Arc<Mutex<HubInner>>,
}

impl Hub {
    pub fn new(latency: Duration) -> Hub {
        Hub {
            latency,
            inner: Arc::default(),
        }
    }

    /// Registers `address` and returns its transport and inbox.
    pub fn join(&self, address: Address) -> (Arc<HubTransport>, Inbound) {
        let (tx, rx) = mpsc::unbounded_channel();
        let mut inner = self.inner.lock();
        inner.inboxes.insert(address, tx);
        inner.down.remove(&address);
        inner
            .links
            .retain(|(a, b), _| *a != address && *b != address);
        drop(inner);
        let transport = HubTransport {
            me: address,
            hub: self.clone(),
        };
        (Arc::new(transport), rx)
    }

    /// Cuts a node off in both directions until it joins again.
    pub fn disconnect(&self, address: &Address) {
        let mut inner = self.inner.lock();
        inner.down.insert(*address);
        inner.inboxes.remove(address);
        inner.links.retain(|(a, b), _| a != address && b != address);
    }

    pub fn set_fault(&self, address: Address, fault: Option<Fault>) {
        let mut inner = self.inner.lock();
        match fault {
            Some(f) => inner.faults.insert(address, f),
            None => inner.faults.remove(&address),
        };
    }

    /// Copies every routed message, as (from, to, message), to the
    /// returned channel.
    pub fn tap(&self) -> mpsc::UnboundedReceiver<(Address, Address, Message)> {
        let (tx, rx) = mpsc::unbounded_channel();
        self.inner.lock().tap = Some(tx);
        rx
    }

    /// Delivers `msg` to `to` as if sent by `from`, whoever that is.
    pub fn inject(&self, from: Address, to: &Address, msg: Message) {
        self.route(from, to, msg);
    }

    fn route(&self, from: Address, to: &Address, mut msg: Message) {
        let mut inner = self.inner.lock();
        if inner.down.contains(&from) || inner.down.contains(to) || from == *to {
            return;
        }
        let Some(inbox) = inner.inboxes.get(to).cloned() else {
            return;
        };
        if inner.faults.get(&from) == Some(&Fault::CorruptBlobs) {
            if let Message::BlobResponse { bytes: Some(b), .. } = &mut msg {
                if let Some(first) = b.first_mut() {
                    *first ^= 0x01;
                }
            }
        }
        if let Some(tap) = &inner.tap {
            let _ = tap.send((from, *to, msg.clone()));
        }
        let latency = self.latency;
        let link = inner.links.entry((from, *to)).or_insert_with(|| {
            let (tx, mut rx) = mpsc::unbounded_channel::<(Instant, Message)>();
            tokio::spawn(async move {
                while let Some((at, msg)) = rx.recv().await {
                    tokio::time::sleep_until(at).await;
                    if inbox.send((from, msg)).is_err() {
                        break;
                    }
                }
            });
            tx
        });
        let _ = link.send((Instant::now() + latency, msg));
    }
}

pub struct HubTransport {
    me: Address,
    hub: Hub,
}

impl Transport for HubTransport {
    fn send(&self, to: &Address, msg: Message) {
        self.hub.route(self.me, to, msg);
    }

    fn peers(&self) -> Vec<Address> {
        let inner = self.hub.inner.lock();
        if inner.down.contains(&self.me) {
            return Vec::new();
        }
        inner
            .inboxes
            .keys()
            .filter(|a| **a != self.me)
            .copied()
            .collect()
    }
}
