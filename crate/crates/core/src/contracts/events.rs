//! Event names and payload layouts emitted by the registry.
//!
//! Names and field orders are part of the wire contract with subscribers
//! and must not change.

use serde::{Deserialize, Serialize};

use crate::codec::{Decoder, Encoder, EncodingError};
use crate::contracts::workflow::{WorkflowActivity, WorkflowStage};
use crate::engine::Event;
use crate::hash::Address;
use crate::offchain::ContentId;

pub const DATASET_REGISTERED: &str = "DatasetRegistered";
pub const MODEL_REGISTERED: &str = "ModelRegistered";
pub const STAGE_ADVANCED: &str = "StageAdvanced";
pub const OUT_OF_ORDER_ACTIVITY: &str = "OutOfOrderActivity";
pub const ASSET_PUBLISHED: &str = "AssetPublished";

/// Decoded form of a registry event payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event")]
pub enum ProvenanceEvent {
    DatasetRegistered {
        dataset: Address,
        owner: Address,
        ancestor: Option<Address>,
        anchor: Option<ContentId>,
    },
    ModelRegistered {
        model: Address,
        owner: Address,
    },
    StageAdvanced {
        asset: Address,
        participant: Address,
        activity: WorkflowActivity,
        from: WorkflowStage,
        to: WorkflowStage,
    },
    OutOfOrderActivity {
        asset: Address,
        participant: Address,
        activity: WorkflowActivity,
        stage: WorkflowStage,
    },
    AssetPublished {
        asset: Address,
        participant: Address,
        anchor: ContentId,
    },
}

impl ProvenanceEvent {
    pub fn name(&self) -> &'static str {
        match self {
            ProvenanceEvent::DatasetRegistered { .. } => DATASET_REGISTERED,
            ProvenanceEvent::ModelRegistered { .. } => MODEL_REGISTERED,
            ProvenanceEvent::StageAdvanced { .. } => STAGE_ADVANCED,
            ProvenanceEvent::OutOfOrderActivity { .. } => OUT_OF_ORDER_ACTIVITY,
            ProvenanceEvent::AssetPublished { .. } => ASSET_PUBLISHED,
        }
    }

    pub fn asset(&self) -> Address {
        match self {
            ProvenanceEvent::DatasetRegistered { dataset, .. } => *dataset,
            ProvenanceEvent::ModelRegistered { model, .. } => *model,
            ProvenanceEvent::StageAdvanced { asset, .. }
            | ProvenanceEvent::OutOfOrderActivity { asset, .. }
            | ProvenanceEvent::AssetPublished { asset, .. } => *asset,
        }
    }

    pub fn encode_payload(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        match self {
            ProvenanceEvent::DatasetRegistered {
                dataset,
                owner,
                ancestor,
                anchor,
            } => {
                enc.put_address(dataset)
                    .put_address(owner)
                    .put_opt_address(ancestor.as_ref())
                    .put_opt_nested(anchor.as_ref());
            }
            ProvenanceEvent::ModelRegistered { model, owner } => {
                enc.put_address(model).put_address(owner);
            }
            ProvenanceEvent::StageAdvanced {
                asset,
                participant,
                activity,
                from,
                to,
            } => {
                enc.put_address(asset)
                    .put_address(participant)
                    .put_u64(activity.tag())
                    .put_u64(from.tag())
                    .put_u64(to.tag());
            }
            ProvenanceEvent::OutOfOrderActivity {
                asset,
                participant,
                activity,
                stage,
            } => {
                enc.put_address(asset)
                    .put_address(participant)
                    .put_u64(activity.tag())
                    .put_u64(stage.tag());
            }
            ProvenanceEvent::AssetPublished {
                asset,
                participant,
                anchor,
            } => {
                enc.put_address(asset)
                    .put_address(participant)
                    .put_nested(anchor);
            }
        }
        enc.finish()
    }

    /// Decodes a registry event; `None` for events this module does not own.
    pub fn decode(event: &Event) -> Result<Option<Self>, EncodingError> {
        let mut dec = Decoder::new(&event.payload);
        let activity = |dec: &mut Decoder<'_>| {
            let tag = dec.get_u64()?;
            WorkflowActivity::from_tag(tag).ok_or(EncodingError::BadTag {
                field: "activity",
                tag,
            })
        };
        let stage = |dec: &mut Decoder<'_>| {
            let tag = dec.get_u64()?;
            WorkflowStage::from_tag(tag).ok_or(EncodingError::BadTag {
                field: "stage",
                tag,
            })
        };
        let decoded = match event.name.as_str() {
            DATASET_REGISTERED => ProvenanceEvent::DatasetRegistered {
                dataset: dec.get_address("dataset")?,
                owner: dec.get_address("owner")?,
                ancestor: dec.get_opt_address("ancestor")?,
                anchor: dec.get_opt_nested()?,
            },
            MODEL_REGISTERED => ProvenanceEvent::ModelRegistered {
                model: dec.get_address("model")?,
                owner: dec.get_address("owner")?,
            },
            STAGE_ADVANCED => ProvenanceEvent::StageAdvanced {
                asset: dec.get_address("asset")?,
                participant: dec.get_address("participant")?,
                activity: activity(&mut dec)?,
                from: stage(&mut dec)?,
                to: stage(&mut dec)?,
            },
            OUT_OF_ORDER_ACTIVITY => ProvenanceEvent::OutOfOrderActivity {
                asset: dec.get_address("asset")?,
                participant: dec.get_address("participant")?,
                activity: activity(&mut dec)?,
                stage: stage(&mut dec)?,
            },
            ASSET_PUBLISHED => ProvenanceEvent::AssetPublished {
                asset: dec.get_address("asset")?,
                participant: dec.get_address("participant")?,
                anchor: dec.get_nested()?,
            },
            _ => return Ok(None),
        };
        dec.finish()?;
        Ok(Some(decoded))
    }
}
