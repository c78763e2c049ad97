use serde::{Deserialize, Serialize};

use crate::codec::{Decode, Encode, Encoder};
use crate::contracts::events::ProvenanceEvent;
use crate::contracts::payload::{ActivityPayload, AssetMetadata, NamedValue, PublishArgs, Value};
use crate::contracts::record::ProvenanceRecord;
use crate::contracts::workflow::{
    LinearModelWorkflow, WorkflowActivity, WorkflowRules, WorkflowStage,
};
use crate::contracts::{methods, CallEnv, Effects};
use crate::engine::RevertReason;
use crate::hash::Address;
use crate::offchain::ContentId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub owner: Address,
    pub registry: Address,
    pub metadata: AssetMetadata,
    pub stage: WorkflowStage,
    pub history: Vec<ProvenanceRecord>,
    pub artifact_anchor: Option<ContentId>,
}

impl ModelState {
    pub fn new(owner: Address, registry: Address, metadata: AssetMetadata) -> Self {
        ModelState {
            owner,
            registry,
            metadata,
            stage: WorkflowStage::Registered,
            history: Vec::new(),
            artifact_anchor: None,
        }
    }

    /// Appends a record for `activity` and advances the stage if the
    /// workflow allows it. Out-of-order reports are kept, not rejected.
    pub fn record_activity(
        &mut self,
        me: Address,
        env: &CallEnv,
        activity: WorkflowActivity,
        payload: ActivityPayload,
        fx: &mut Effects,
    ) -> bool {
        let next = LinearModelWorkflow.next_stage(self.stage, activity);
        let record = env.record(activity, payload, next.is_some());
        fx.bytes_written += record.encoded_len() as u64;
        self.history.push(record);
        match next {
            Some(to) => {
                fx.emit(
                    self.registry,
                    ProvenanceEvent::StageAdvanced {
                        asset: me,
                        participant: env.sender,
                        activity,
                        from: self.stage,
                        to,
                    },
                );
                self.stage = to;
                true
            }
            None => {
                fx.emit(
                    self.registry,
                    ProvenanceEvent::OutOfOrderActivity {
                        asset: me,
                        participant: env.sender,
                        activity,
                        stage: self.stage,
                    },
                );
                false
            }
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
            stage => LinearModelWorkflow
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

/// Dispatches a call on a model contract.
pub(crate) fn call(
    state: &mut ModelState,
    me: Address,
    env: &CallEnv,
    method: &str,
    args: &[u8],
    fx: &mut Effects,
) -> Result<(), RevertReason> {
    if method == methods::PUBLISH {
        let args = PublishArgs::decode_exact(args).map_err(|_| RevertReason::BadArgs)?;
        return state.publish(me, env, args.anchor, fx);
    }
    let activity = WorkflowActivity::from_method_name(method)
        .filter(|a| a.is_model_activity())
        .ok_or(RevertReason::NoSuchMethod)?;
    if args.len() as u64 > env.max_payload_bytes {
        return Err(RevertReason::PayloadTooLarge);
    }
    let payload = ActivityPayload::decode_exact(args).map_err(|_| RevertReason::BadArgs)?;
    state.record_activity(me, env, activity, payload, fx);
    Ok(())
}

impl Encode for ModelState {
    fn encode(&self, enc: &mut Encoder) {
        enc.put_address(&self.owner)
            .put_address(&self.registry)
            .put_nested(&self.metadata)
            .put_u64(self.stage.tag())
            .put_list(&self.history)
            .put_opt_nested(self.artifact_anchor.as_ref());
    }
}
