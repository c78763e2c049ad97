//! Content-addressed storage for payloads kept off the chain.

pub mod content;
pub mod store;

pub use content::{verify_artifact, ContentId, ParseContentIdError, Verification};
pub use store::{first_verified, BlobStore, IntegrityError, StoreError, DEFAULT_MAX_BLOB};
