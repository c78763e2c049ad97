//! Pending transactions, ordered by arrival time with tx_id as tiebreak.

use std::collections::{BTreeSet, HashMap};

use proml_core::engine::WorldState;
use proml_core::ledger::{check_signature, Transaction, TxRejection};
use proml_core::{Address, TxId};

#[derive(Debug, Default)]
pub struct Pool {
    by_id: HashMap<TxId, (u64, Transaction)>,
    order: BTreeSet<(u64, TxId)>,
}

impl Pool {
    pub fn new() -> Self {
        Self::default()
    }

    /// False if the transaction is already pending.
    pub fn insert(&mut self, tx: Transaction, arrival_ms: u64) -> bool {
        let id = tx.tx_id();
        if self.by_id.contains_key(&id) {
            return false;
        }
        self.order.insert((arrival_ms, id));
        self.by_id.insert(id, (arrival_ms, tx));
        true
    }

    pub fn contains(&self, id: &TxId) -> bool {
        self.by_id.contains_key(id)
    }

    pub fn remove(&mut self, id: &TxId) -> Option<Transaction> {
        let (arrival, tx) = self.by_id.remove(id)?;
        self.order.remove(&(arrival, *id));
        Some(tx)
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    pub fn ordered(&self) -> Vec<Transaction> {
        self.order
            .iter()
            .map(|(_, id)| self.by_id[id].1.clone())
            .collect()
    }

    /// Nonce after the highest pending one from `sender`.
    pub fn next_nonce(&self, sender: &Address) -> Option<u64> {
        self.by_id
            .values()
            .filter(|(_, tx)| tx.sender() == *sender)
            .map(|(_, tx)| tx.nonce() + 1)
            .max()
    }

    /// Drops transactions that `state` has made impossible and returns
    /// them with the reason. Call after every committed block, once the
    /// block's own transactions have been removed.
    pub fn prune(&mut self, state: &WorldState) -> Vec<(TxId, TxRejection)> {
        let mut dead = Vec::new();
        for (id, (_, tx)) in &self.by_id {
            if let Err(reason) = check_signature(tx, state) {
                dead.push((*id, reason));
                continue;
            }
            let expected = state.nonce_of(&tx.sender());
            if tx.nonce() < expected {
                dead.push((
                    *id,
                    TxRejection::BadNonce {
                        expected,
                        got: tx.nonce(),
                    },
                ));
            }
        }
        for (id, _) in &dead {
            self.remove(id);
        }
        dead
    }
}
