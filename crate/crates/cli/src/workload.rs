//! The ten-operation benchmark workload, loaded from frozen fixtures.
//!
//! Fixture strings of the form `$LABEL` stand for the address that op
//! `LABEL` registered, so later ops can point at earlier ones.

use std::collections::BTreeMap;

use proml_core::contracts::{AssetMetadata, WorkflowActivity};
use proml_core::Address;
use proml_node::types::{CaptureKind, CaptureRequest, PayloadJson};
use serde::Deserialize;

pub const KDD_WORKLOAD: &str = include_str!("../fixtures/kdd_workload.json");

pub const OP_LABELS: [&str; 10] = [
    "D1", "D2", "ML1", "ML2-1", "ML2-2", "ML2-3", "ML2-4", "ML2-5", "ML2-6", "ML2-7",
];

#[derive(Debug, thiserror::Error)]
pub enum WorkloadError {
    #[error("fixture: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("op {op} refers to {name}, which has no address yet")]
    Unbound { op: String, name: String },
    #[error("{0} is not a valid placeholder")]
    BadPlaceholder(String),
}

/// Who submits an op. Datasets come from the data admin, models from the
/// model developer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    DataAdmin,
    ModelDeveloper,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpFixture {
    pub label: String,
    pub kind: CaptureKind,
    #[serde(default)]
    pub asset: Option<String>,
    #[serde(default)]
    pub activity: Option<WorkflowActivity>,
    #[serde(default)]
    pub metadata: Option<AssetMetadata>,
    #[serde(default)]
    pub ancestor: Option<String>,
    #[serde(default)]
    pub payload: Option<PayloadJson>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Workload {
    pub ops: Vec<OpFixture>,
}

/// Addresses registered so far, by op label.
pub type Bindings = BTreeMap<String, Address>;

impl Workload {
    pub fn kdd() -> Workload {
        Workload::from_json(KDD_WORKLOAD).expect("bundled fixture parses")
    }

    pub fn from_json(s: &str) -> Result<Workload, WorkloadError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn labels(&self) -> Vec<&str> {
        self.ops.iter().map(|o| o.label.as_str()).collect()
    }
}

impl OpFixture {
    pub fn role(&self) -> Role {
        match self.kind {
            CaptureKind::RegisterDataset => Role::DataAdmin,
            _ => Role::ModelDeveloper,
        }
    }

    pub fn registers(&self) -> bool {
        matches!(
            self.kind,
            CaptureKind::RegisterDataset | CaptureKind::RegisterModel
        )
    }

    /// The capture request with every placeholder resolved.
    pub fn request(&self, bound: &Bindings) -> Result<CaptureRequest, WorkloadError> {
        let resolve = |s: &str| self.resolve(s, bound);
        let mut req = CaptureRequest::new(self.kind);
        req.activity = self.activity;
        req.metadata = self.metadata.clone();
        req.asset = self.asset.as_deref().map(resolve).transpose()?;
        req.ancestor = self.ancestor.as_deref().map(resolve).transpose()?;
        if let Some(p) = &self.payload {
            let section = |m: &BTreeMap<String, serde_json::Value>| {
                m.iter()
                    .map(|(k, v)| Ok((k.clone(), self.resolve_json(v, bound)?)))
                    .collect::<Result<BTreeMap<_, _>, WorkloadError>>()
            };
            req.payload = Some(PayloadJson {
                inputs: section(&p.inputs)?,
                outputs: section(&p.outputs)?,
                params: section(&p.params)?,
            });
        }
        Ok(req)
    }

    fn resolve(&self, s: &str, bound: &Bindings) -> Result<Address, WorkloadError> {
        match s.strip_prefix('$') {
            Some(name) => bound
                .get(name)
                .copied()
                .ok_or_else(|| WorkloadError::Unbound {
                    op: self.label.clone(),
                    name: name.to_string(),
                }),
            None => s
                .parse()
                .map_err(|_| WorkloadError::BadPlaceholder(s.to_string())),
        }
    }

    fn resolve_json(
        &self,
        v: &serde_json::Value,
        bound: &Bindings,
    ) -> Result<serde_json::Value, WorkloadError> {
        match v.as_str() {
            Some(s) if s.starts_with('$') => Ok(self.resolve(s, bound)?.to_hex().into()),
            _ => Ok(v.clone()),
        }
    }
}
