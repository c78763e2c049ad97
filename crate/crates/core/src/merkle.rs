//! Binary SHA-256 Merkle trees over 32-byte leaves.
//!
//! Odd levels duplicate their last node; the root of an empty tree is 32
//! zero bytes and the root of a single leaf is the leaf itself.

use crate::hash::{sha256_concat, Hash32};

fn parent(left: &Hash32, right: &Hash32) -> Hash32 {
    sha256_concat(&[&left.0, &right.0])
}

fn next_level(level: &[Hash32]) -> Vec<Hash32> {
    level
        .chunks(2)
        .map(|pair| match pair {
            [l, r] => parent(l, r),
            [l] => parent(l, l),
            _ => unreachable!("chunks(2) yields one or two items"),
        })
        .collect()
}

pub fn merkle_root(leaves: &[Hash32]) -> Hash32 {
    if leaves.is_empty() {
        return Hash32::ZERO;
    }
    let mut level = leaves.to_vec();
    while level.len() > 1 {
        level = next_level(&level);
    }
    level[0]
}

/// One step of an inclusion proof.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProofStep {
    pub sibling: Hash32,
    /// True when the sibling sits to the right of the running hash.
    pub sibling_on_right: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MerkleProof {
    pub steps: Vec<ProofStep>,
}

/// Inclusion proof for `leaves[index]`, or `None` if out of range.
pub fn merkle_proof(leaves: &[Hash32], index: usize) -> Option<MerkleProof> {
    if index >= leaves.len() {
        return None;
    }
    let mut steps = Vec::new();
    let mut level = leaves.to_vec();
    let mut idx = index;
    while level.len() > 1 {
        let sibling_idx = if idx.is_multiple_of(2) {
            idx + 1
        } else {
            idx - 1
        };
        let sibling = *level.get(sibling_idx).unwrap_or(&level[idx]);
        steps.push(ProofStep {
            sibling,
            sibling_on_right: idx.is_multiple_of(2),
        });
        level = next_level(&level);
        idx /= 2;
    }
    Some(MerkleProof { steps })
}

pub fn verify_merkle_proof(root: &Hash32, leaf: &Hash32, proof: &MerkleProof) -> bool {
    let computed = proof.steps.iter().fold(*leaf, |acc, step| {
        if step.sibling_on_right {
            parent(&acc, &step.sibling)
        } else {
            parent(&step.sibling, &acc)
        }
    });
    computed == *root
}
