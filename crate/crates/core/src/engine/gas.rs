//! Gas schedule and metering arithmetic.

use serde::{Deserialize, Serialize};

/// Per-operation gas prices, fixed at genesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GasSchedule {
    pub tx_base: u64,
    pub per_byte_payload: u64,
    pub contract_deploy_base: u64,
    pub per_byte_storage_written: u64,
    pub event_base: u64,
    pub per_byte_event: u64,
}

impl Default for GasSchedule {
    fn default() -> Self {
        GasSchedule {
            tx_base: 21_000,
            per_byte_payload: 16,
            contract_deploy_base: 32_000,
            per_byte_storage_written: 640,
            event_base: 375,
            per_byte_event: 8,
        }
    }
}

impl GasSchedule {
    /// Every entry must be strictly positive.
    pub fn validate(&self) -> Result<(), &'static str> {
        let entries = [
            ("tx_base", self.tx_base),
            ("per_byte_payload", self.per_byte_payload),
            ("contract_deploy_base", self.contract_deploy_base),
            ("per_byte_storage_written", self.per_byte_storage_written),
            ("event_base", self.event_base),
            ("per_byte_event", self.per_byte_event),
        ];
        match entries.iter().find(|(_, v)| *v == 0) {
            Some((name, _)) => Err(name),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    Call,
    Deployment,
}

/// Total gas for one transaction.
///
/// `event_payload_lens` holds the payload length of every emitted event.
pub fn charge_gas(
    schedule: &GasSchedule,
    op: OpKind,
    bytes_payload: u64,
    bytes_written: u64,
    event_payload_lens: &[u64],
) -> u64 {
    let mut gas = schedule
        .tx_base
        .saturating_add(schedule.per_byte_payload.saturating_mul(bytes_payload));
    if op == OpKind::Deployment {
        gas = gas.saturating_add(schedule.contract_deploy_base);
    }
    gas = gas.saturating_add(
        schedule
            .per_byte_storage_written
            .saturating_mul(bytes_written),
    );
    for len in event_payload_lens {
        gas = gas
            .saturating_add(schedule.event_base)
            .saturating_add(schedule.per_byte_event.saturating_mul(*len));
    }
    gas
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_call_costs_tx_base() {
        let s = GasSchedule::default();
        assert_eq!(charge_gas(&s, OpKind::Call, 0, 0, &[]), s.tx_base);
    }

    #[test]
    fn deployment_costs_more_than_call() {
        let s = GasSchedule::default();
        let call = charge_gas(&s, OpKind::Call, 300, 500, &[100]);
        let deploy = charge_gas(&s, OpKind::Deployment, 300, 500, &[100]);
        assert_eq!(deploy - call, s.contract_deploy_base);
    }

    #[test]
    fn formula_by_hand() {
        let s = GasSchedule::default();
        // 21000 + 16*10 + 32000 + 640*5 + (375 + 8*4) + (375 + 8*0)
        assert_eq!(
            charge_gas(&s, OpKind::Deployment, 10, 5, &[4, 0]),
            21_000 + 160 + 32_000 + 3_200 + 407 + 375
        );
    }

    #[test]
    fn zero_entry_rejected() {
        let s = GasSchedule {
            event_base: 0,
            ..GasSchedule::default()
        };
        assert_eq!(s.validate(), Err("event_base"));
    }
}
