//! Lineage walks and artifact checks, using only what the chain records.

use std::collections::{BTreeSet, VecDeque};
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use proml_core::contracts::{AssetKind, AssetView, ProvenanceRecord, Value};
use proml_core::offchain::ContentId;
use proml_core::Address;
use serde::Serialize;

use crate::api::{ApiError, NodeApi};

#[derive(Debug, Clone, Serialize)]
pub struct LineageEntry {
    pub asset: AssetView,
    pub history: Vec<ProvenanceRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineageEdge {
    pub from: Address,
    pub to: Address,
    /// `ancestor`, or the input name that referenced `to`.
    pub via: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Lineage {
    /// Breadth-first from the starting asset.
    pub assets: Vec<LineageEntry>,
    pub edges: Vec<LineageEdge>,
}

impl Lineage {
    pub fn addresses(&self) -> Vec<Address> {
        self.assets.iter().map(|e| e.asset.address).collect()
    }
}

/// Addresses an asset points at: its ancestor, then every address-valued
/// input of its records, first mention first.
fn references(entry: &LineageEntry) -> Vec<(Address, String)> {
    let mut out: Vec<(Address, String)> = Vec::new();
    if let Some(a) = entry.asset.ancestor {
        out.push((a, "ancestor".into()));
    }
    for rec in &entry.history {
        for input in &rec.inputs {
            if let Value::Address(a) = input.value {
                if !out.iter().any(|(seen, _)| *seen == a) {
                    out.push((a, input.name.clone()));
                }
            }
        }
    }
    out
}

/// Follows ancestors and input references from `start`. Addresses that
/// are not assets are skipped.
pub async fn walk_lineage<A: NodeApi>(api: &A, start: &Address) -> Result<Lineage, ApiError> {
    let mut lineage = Lineage {
        assets: Vec::new(),
        edges: Vec::new(),
    };
    let mut seen = BTreeSet::from([*start]);
    let mut queue = VecDeque::from([*start]);
    while let Some(addr) = queue.pop_front() {
        let asset = match api.asset(&addr).await {
            Ok(a) => a,
            Err(e) if e.is_not_found() && addr != *start => continue,
            Err(e) => return Err(e),
        };
        let history = api.history(&addr).await?;
        let entry = LineageEntry { asset, history };
        for (to, via) in references(&entry) {
            if to == addr {
                continue;
            }
            if seen.insert(to) {
                queue.push_back(to);
            }
            lineage.edges.push(LineageEdge {
                from: addr,
                to,
                via,
            });
        }
        lineage.assets.push(entry);
    }
    // Edges into addresses that turned out not to be assets go too.
    let found = lineage.addresses();
    lineage.edges.retain(|e| found.contains(&e.to));
    Ok(lineage)
}

pub fn render_lineage(l: &Lineage) -> String {
    let mut out = String::new();
    for (i, e) in l.assets.iter().enumerate() {
        let a = &e.asset;
        let kind = match a.kind {
            AssetKind::Dataset => "dataset",
            AssetKind::Model => "model",
        };
        let via = l
            .edges
            .iter()
            .find(|edge| edge.to == a.address)
            .map(|edge| format!("  <- {} of {}", edge.via, edge.from))
            .unwrap_or_default();
        out += &format!(
            "{}{kind} {} {} v{} [{}]{via}\n",
            if i == 0 { "" } else { "  " },
            a.address,
            a.metadata.name,
            a.metadata.version,
            a.stage,
        );
        for (k, r) in e.history.iter().enumerate() {
            out += &format!(
                "    #{k} {:?} by {} at height {}{}\n",
                r.activity,
                r.participant,
                r.block_height,
                if r.accepted_transition {
                    ""
                } else {
                    " (out of order)"
                },
            );
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Match(ContentId),
    Mismatch {
        anchored: ContentId,
        local: ContentId,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error(transparent)]
    Api(#[from] ApiError),
    #[error("reading {0}: {1}")]
    Io(String, std::io::Error),
    #[error("asset {0} has no published artifact")]
    NoAnchor(Address),
}

/// Hashes the file without loading it whole and compares it with the
/// asset's on-chain anchor.
pub async fn verify_file<A: NodeApi>(
    api: &A,
    asset: &Address,
    path: &Path,
) -> Result<Verdict, VerifyError> {
    let io = |e| VerifyError::Io(path.display().to_string(), e);
    let local = ContentId::of_reader(BufReader::new(File::open(path).map_err(io)?)).map_err(io)?;
    let view = api.asset(asset).await?;
    let anchored = view.artifact_anchor.ok_or(VerifyError::NoAnchor(*asset))?;
    Ok(if anchored == local {
        Verdict::Match(local)
    } else {
        Verdict::Mismatch { anchored, local }
    })
}
