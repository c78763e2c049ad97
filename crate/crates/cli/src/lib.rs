//! Operator commands and the benchmark harness for a provenance network.

pub mod api;
pub mod audit;
pub mod bench;
pub mod netinit;
pub mod report;
pub mod workload;

pub use api::{ApiError, HttpApi, NodeApi};
