use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

const PER_MILLION: Decimal = Decimal::from_parts(1_000_000, 0, 0, false, 0);

/// Exact USD cost of a call at per-million-token prices.
pub fn token_cost(
    prompt_tokens: u64,
    completion_tokens: u64,
    prompt_price_per_million: Decimal,
    completion_price_per_million: Decimal,
) -> Decimal {
    (Decimal::from(prompt_tokens) * prompt_price_per_million
        + Decimal::from(completion_tokens) * completion_price_per_million)
        / PER_MILLION
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub agent_name: String,
    pub model_id: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub usd_cost: Decimal,
    pub wall_time_ms: u64,
}

/// Append-only record of model spend within one run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLedger {
    entries: Vec<LedgerEntry>,
    running_total_usd: Decimal,
}

impl CostLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, entry: LedgerEntry) {
        self.running_total_usd += entry.usd_cost;
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn total(&self) -> Decimal {
        self.running_total_usd
    }

    /// Recomputes the total from the entries.
    pub fn recount(&self) -> Decimal {
        self.entries.iter().map(|e| e.usd_cost).sum()
    }

    pub fn total_for_agent(&self, agent: &str) -> Decimal {
        self.entries
            .iter()
            .filter(|e| e.agent_name == agent)
            .map(|e| e.usd_cost)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::str::FromStr;

    fn usd(s: &str) -> Decimal {
        Decimal::from_str(s).unwrap()
    }

    #[test]
    fn gpt4o_style_pricing() {
        // 1000 x 2.5e-6 + 500 x 1e-5
        assert_eq!(token_cost(1000, 500, usd("2.50"), usd("10.00")), usd("0.0075"));
    }

    #[test]
    fn total_tracks_entries() {
        let mut ledger = CostLedger::new();
        for cost in ["0.10", "0.20", "0.30"] {
            ledger.record(LedgerEntry {
                agent_name: "setup".into(),
                model_id: "m".into(),
                prompt_tokens: 0,
                completion_tokens: 0,
                usd_cost: usd(cost),
                wall_time_ms: 0,
            });
        }
        // exact, unlike 0.1 + 0.2 + 0.3 in binary floating point
        assert_eq!(ledger.total(), usd("0.6"));
        assert_eq!(ledger.total_for_agent("setup"), usd("0.60"));
    }

    proptest! {
        #[test]
        fn running_total_equals_recount(costs in prop::collection::vec((0u64..5_000_000, 0u64..200_000), 0..60)) {
            let mut ledger = CostLedger::new();
            let mut previous = Decimal::ZERO;
            for (p, c) in costs {
                ledger.record(LedgerEntry {
                    agent_name: "a".into(), model_id: "m".into(),
                    prompt_tokens: p, completion_tokens: c,
                    usd_cost: token_cost(p, c, usd("2.5"), usd("10")),
                    wall_time_ms: 1,
                });
                prop_assert!(ledger.total() >= previous);
                previous = ledger.total();
            }
            prop_assert_eq!(ledger.total(), ledger.recount());
        }
    }
}
