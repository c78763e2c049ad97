use serde::{Deserialize, Serialize};

use crate::codec::{Decode, Decoder, Encode, Encoder, EncodingError};
use crate::contracts::payload::NamedValue;
use crate::contracts::workflow::{WorkflowActivity, WorkflowRules, WorkflowStage};
use crate::hash::{Address, TxId};

/// One entry in an asset's append-only history.
///
/// `participant` is always the verified sender of the recording
/// transaction; nothing in the call payload can set it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub participant: Address,
    pub activity: WorkflowActivity,
    pub inputs: Vec<NamedValue>,
    pub outputs: Vec<NamedValue>,
    pub params: Vec<NamedValue>,
    pub block_height: u64,
    pub timestamp: u64,
    pub tx_id: TxId,
    pub accepted_transition: bool,
}

impl Encode for ProvenanceRecord {
    fn encode(&self, enc: &mut Encoder) {
        enc.put_address(&self.participant)
            .put_u64(self.activity.tag())
            .put_list(&self.inputs)
            .put_list(&self.outputs)
            .put_list(&self.params)
            .put_u64(self.block_height)
            .put_u64(self.timestamp)
            .put_hash(&self.tx_id)
            .put_bool(self.accepted_transition);
    }
}

impl Decode for ProvenanceRecord {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, EncodingError> {
        let participant = dec.get_address("participant")?;
        let tag = dec.get_u64()?;
        let activity = WorkflowActivity::from_tag(tag).ok_or(EncodingError::BadTag {
            field: "activity",
            tag,
        })?;
        Ok(ProvenanceRecord {
            participant,
            activity,
            inputs: dec.get_list()?,
            outputs: dec.get_list()?,
            params: dec.get_list()?,
            block_height: dec.get_u64()?,
            timestamp: dec.get_u64()?,
            tx_id: dec.get_hash("tx_id")?,
            accepted_transition: dec.get_bool("accepted_transition")?,
        })
    }
}

/// Replays `history` through `rules`, starting from `Registered`.
///
/// Registration records are the starting point and never move the stage.
pub fn fold_stage<R: WorkflowRules + ?Sized>(
    rules: &R,
    history: &[ProvenanceRecord],
) -> WorkflowStage {
    history
        .iter()
        .filter(|r| r.activity != WorkflowActivity::Register)
        .fold(WorkflowStage::Registered, |stage, r| {
            rules.next_stage(stage, r.activity).unwrap_or(stage)
        })
}
