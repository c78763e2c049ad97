//! The provenance node daemon: wallet, chain runtime, peer links, blob
//! replication, the capture service and the HTTP API.

pub mod api;
pub mod capture;
pub mod clock;
pub mod config;
pub mod devnet;
pub mod messages;
pub mod node;
pub mod pool;
pub mod query;
pub mod transport;
pub mod types;
pub mod wallet;

pub use capture::CaptureError;
pub use clock::Clock;
pub use config::{NodeConfig, Role};
pub use node::{Node, NodeError, NodeHandle, NodeParams, Stats};
pub use wallet::{KeyFile, Wallet, WalletError};
