//! Read-only views over asset contracts.

use serde::{Deserialize, Serialize};

use crate::contracts::payload::AssetMetadata;
use crate::contracts::record::ProvenanceRecord;
use crate::contracts::workflow::WorkflowStage;
use crate::engine::{ContractStorage, WorldState};
use crate::hash::Address;
use crate::offchain::ContentId;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("no asset at {0}")]
    UnknownAsset(Address),
    #[error("lineage of {0} contains a cycle")]
    Cycle(Address),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssetKind {
    Dataset,
    Model,
}

/// Summary of one asset contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetView {
    pub address: Address,
    pub kind: AssetKind,
    pub owner: Address,
    pub metadata: AssetMetadata,
    pub stage: WorkflowStage,
    pub ancestor: Option<Address>,
    pub artifact_anchor: Option<ContentId>,
    pub history_len: u64,
}

impl AssetView {
    pub fn load(state: &WorldState, address: &Address) -> Result<AssetView, QueryError> {
        let contract = state
            .contract(address)
            .ok_or(QueryError::UnknownAsset(*address))?;
        Ok(match &contract.storage {
            ContractStorage::Dataset(d) => AssetView {
                address: *address,
                kind: AssetKind::Dataset,
                owner: d.owner,
                metadata: d.metadata.clone(),
                stage: d.stage,
                ancestor: d.ancestor,
                artifact_anchor: d.artifact_anchor,
                history_len: d.history.len() as u64,
            },
            ContractStorage::Model(m) => AssetView {
                address: *address,
                kind: AssetKind::Model,
                owner: m.owner,
                metadata: m.metadata.clone(),
                stage: m.stage,
                ancestor: None,
                artifact_anchor: m.artifact_anchor,
                history_len: m.history.len() as u64,
            },
            ContractStorage::Registry(_) => return Err(QueryError::UnknownAsset(*address)),
        })
    }
}

/// The full ordered history of an asset.
pub fn history<'a>(
    state: &'a WorldState,
    address: &Address,
) -> Result<&'a [ProvenanceRecord], QueryError> {
    match state.contract(address).map(|c| &c.storage) {
        Some(ContractStorage::Dataset(d)) => Ok(&d.history),
        Some(ContractStorage::Model(m)) => Ok(&m.history),
        _ => Err(QueryError::UnknownAsset(*address)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineageStep {
    pub asset: Address,
    pub history: Vec<ProvenanceRecord>,
}

/// Walks ancestor links from `address` back to the root dataset, returning
/// each asset's history in that order.
pub fn lineage(state: &WorldState, address: &Address) -> Result<Vec<LineageStep>, QueryError> {
    let mut steps: Vec<LineageStep> = Vec::new();
    let mut cursor = Some(*address);
    while let Some(asset) = cursor {
        if steps.iter().any(|s| s.asset == asset) {
            return Err(QueryError::Cycle(asset));
        }
        let history = history(state, &asset)?.to_vec();
        steps.push(LineageStep { asset, history });
        cursor = state.dataset(&asset).and_then(|d| d.ancestor);
    }
    Ok(steps)
}

/// Assets registered by `participant`, in registration order.
pub fn assets_for_participant(
    state: &WorldState,
    registry: &Address,
    participant: &Address,
) -> Vec<Address> {
    state
        .registry(registry)
        .map(|r| r.registered_by(participant).to_vec())
        .unwrap_or_default()
}
