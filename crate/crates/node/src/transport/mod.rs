//! Links between nodes. Inbound messages arrive on a channel tagged with
//! the authenticated sender address.

use proml_core::Address;
use tokio::sync::mpsc;

use crate::messages::Message;

mod hub;
mod tcp;

pub use hub::{Fault, Hub, HubTransport};
pub use tcp::{TcpTransport, MAX_FRAME};

pub type Inbound = mpsc::UnboundedReceiver<(Address, Message)>;

pub trait Transport: Send + Sync + 'static {
    /// Queues `msg` for `to`. Delivery is best effort; unknown or
    /// disconnected peers drop it.
    fn send(&self, to: &Address, msg: Message);

    /// Currently connected peers.
    fn peers(&self) -> Vec<Address>;
}
