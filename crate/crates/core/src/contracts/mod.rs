//! Asset-as-a-state-machine contract templates.
//!
//! A single registry contract acts as factory and index for dataset and
//! model contracts and emits every provenance event. Each asset contract
//! holds its workflow stage and an append-only provenance history.

pub mod dataset;
pub mod events;
pub mod model;
pub mod payload;
pub mod query;
pub mod record;
pub mod registry;
pub mod workflow;

pub use dataset::DatasetState;
pub use events::ProvenanceEvent;
pub use model::ModelState;
pub use payload::{
    ActivityPayload, AssetMetadata, NamedValue, PublishArgs, RegisterDatasetArgs,
    RegisterModelArgs, Value,
};
pub use query::{
    assets_for_participant, history, lineage, AssetKind, AssetView, LineageStep, QueryError,
};
pub use record::{fold_stage, ProvenanceRecord};
pub use registry::RegistryState;
pub use workflow::{
    DatasetWorkflow, LinearModelWorkflow, WorkflowActivity, WorkflowRules, WorkflowStage,
};

use crate::hash::{Address, TxId};

/// Method names understood by the registry and asset contracts.
pub mod methods {
    pub const DEPLOY_REGISTRY: &str = "deploy_registry";
    pub const REGISTER_DATASET: &str = "register_dataset";
    pub const REGISTER_MODEL: &str = "register_model";
    pub const PUBLISH: &str = "publish";
}

/// Constructors for the calls each contract understands.
pub mod calls {
    use super::*;
    use crate::codec::Encode;
    use crate::ledger::Call;
    use crate::offchain::ContentId;

    pub fn deploy_registry() -> Call {
        Call::new(methods::DEPLOY_REGISTRY, Vec::new())
    }

    pub fn register_dataset(
        metadata: AssetMetadata,
        ancestor: Option<Address>,
        anchor: Option<ContentId>,
    ) -> Call {
        let args = RegisterDatasetArgs {
            metadata,
            ancestor,
            anchor,
        };
        Call::new(methods::REGISTER_DATASET, args.encode_to_vec())
    }

    pub fn register_model(metadata: AssetMetadata) -> Call {
        Call::new(
            methods::REGISTER_MODEL,
            RegisterModelArgs { metadata }.encode_to_vec(),
        )
    }

    pub fn record(activity: WorkflowActivity, payload: &ActivityPayload) -> Call {
        Call::new(activity.method_name(), payload.encode_to_vec())
    }

    pub fn publish(anchor: ContentId) -> Call {
        Call::new(methods::PUBLISH, PublishArgs { anchor }.encode_to_vec())
    }
}

/// Per-call context handed to contract code.
#[derive(Debug, Clone, Copy)]
pub struct CallEnv {
    pub sender: Address,
    pub nonce: u64,
    pub tx_id: TxId,
    pub block_height: u64,
    pub timestamp: u64,
    pub max_payload_bytes: u64,
}

impl CallEnv {
    pub(crate) fn record(
        &self,
        activity: WorkflowActivity,
        payload: ActivityPayload,
        accepted_transition: bool,
    ) -> ProvenanceRecord {
        ProvenanceRecord {
            participant: self.sender,
            activity,
            inputs: payload.inputs,
            outputs: payload.outputs,
            params: payload.params,
            block_height: self.block_height,
            timestamp: self.timestamp,
            tx_id: self.tx_id,
            accepted_transition,
        }
    }
}

/// Side effects accumulated by a call, used for metering and receipts.
#[derive(Debug, Default)]
pub struct Effects {
    pub bytes_written: u64,
    pub events: Vec<(Address, ProvenanceEvent)>,
    pub new_contract: Option<Address>,
    pub deployment: bool,
}

impl Effects {
    pub(crate) fn emit(&mut self, emitter: Address, event: ProvenanceEvent) {
        self.events.push((emitter, event));
    }
}
