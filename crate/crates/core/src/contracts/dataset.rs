use serde::{Deserialize, Serialize};

use crate::codec::{Decode, Encode, Encoder};
use crate::contracts::events::ProvenanceEvent;
use crate::contracts::payload::{ActivityPayload, AssetMetadata, NamedValue, PublishArgs, Value};
use crate::contracts::record::ProvenanceRecord;
use crate::contracts::workflow::{DatasetWorkflow, WorkflowActivity, WorkflowRules, WorkflowStage};
use crate::contracts::{methods, CallEnv, Effects};
use crate::engine::RevertReason;
use crate::hash::Address;
use crate::offchain::ContentId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetState {
    pub owner: Address,
    pub registry: Address,
    pub metadata: AssetMetadata,
    pub ancestor: Option<Address>,
    pub stage: WorkflowStage,
    pub history: Vec<ProvenanceRecord>,
    pub artifact_anchor: Option<ContentId>,
}

impl DatasetState {
    /// A freshly registered dataset. Its history opens with the
    /// registration record, which carries the lineage link.
    pub fn new(
        me: Address,
        registry: Address,
        env: &CallEnv,
        metadata: AssetMetadata,
        ancestor: Option<Address>,
        anchor: Option<ContentId>,
    ) -> Self {
        let mut payload = ActivityPayload::default();
        if let Some(a) = ancestor {
            payload
                .inputs
                .push(NamedValue::new("ancestor", Value::Address(a)));
        }
        payload
            .outputs
            .push(NamedValue::new("dataset", Value::Address(me)));
        if let Some(c) = anchor {
            payload
                .outputs
                .push(NamedValue::new("content", Value::Content(c)));
        }
        DatasetState {
            owner: env.sender,
            registry,
            metadata,
            ancestor,
            stage: WorkflowStage::Registered,
            history: vec![env.record(WorkflowActivity::Register, payload, true)],
            artifact_anchor: anchor,
        }
    }

    pub fn publish(
        &mut self,
        me: Address,
        env: &CallEnv,
        anchor: ContentId,
        fx: &mut Effects,
    ) -> Result<(), RevertReason> {
        if env.sender != self.owner {
            return Err(RevertReason::NotOwner);
        }
        if anchor.is_zero() {
            return Err(RevertReason::BadAnchor);
        }
        let to = match self.stage {
            WorkflowStage::Published => return Err(RevertReason::AlreadyPublished),
            stage => DatasetWorkflow
                .next_stage(stage, WorkflowActivity::Publish)
                .ok_or(RevertReason::NotPublishable)?,
        };
        let payload = ActivityPayload {
            outputs: vec![NamedValue::new("artifact", Value::Content(anchor))],
            ..ActivityPayload::default()
        };
        let record = env.record(WorkflowActivity::Publish, payload, true);
        fx.bytes_written += (anchor.encoded_len() + record.encoded_len()) as u64;
        self.history.push(record);
        self.artifact_anchor = Some(anchor);
        self.stage = to;
        fx.emit(
            self.registry,
            ProvenanceEvent::AssetPublished {
                asset: me,
                participant: env.sender,
                anchor,
            },
        );
        Ok(())
    }
}

pub(crate) fn call(
    state: &mut DatasetState,
    me: Address,
    env: &CallEnv,
    method: &str,
    args: &[u8],
    fx: &mut Effects,
) -> Result<(), RevertReason> {
    match method {
        methods::PUBLISH => {
            let args = PublishArgs::decode_exact(args).map_err(|_| RevertReason::BadArgs)?;
            state.publish(me, env, args.anchor, fx)
        }
        _ => Err(RevertReason::NoSuchMethod),
    }
}

impl Encode for DatasetState {
    fn encode(&self, enc: &mut Encoder) {
        enc.put_address(&self.owner)
            .put_address(&self.registry)
            .put_nested(&self.metadata)
            .put_opt_address(self.ancestor.as_ref())
            .put_u64(self.stage.tag())
            .put_list(&self.history)
            .put_opt_nested(self.artifact_anchor.as_ref());
    }
}
