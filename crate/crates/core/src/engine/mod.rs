//! Deterministic transaction execution.

pub mod exec;
pub mod gas;
pub mod receipt;
pub mod state;

pub use exec::{apply_transaction, execute_transactions, BlockContext, ExecParams, Execution};
pub use gas::{charge_gas, GasSchedule, OpKind};
pub use receipt::{Event, ExecStatus, Receipt, RevertReason};
pub use state::{Account, ContractInstance, ContractKind, ContractStorage, WorldState};
