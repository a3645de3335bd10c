//! Session configuration and results shared by both engines.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::exchange::Transaction;
use crate::market::ScheduleConfig;
use crate::traders::{TraderError, TraderParams};
use crate::types::{Algo, Price, Side, Time, TraderId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineMode {
    #[serde(alias = "seq")]
    Sequential,
    Threaded,
}

impl EngineMode {
    pub fn tag(self) -> &'static str {
        match self {
            EngineMode::Sequential => "seq",
            EngineMode::Threaded => "threaded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub id: TraderId,
    pub algo: Algo,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    /// Session length in virtual seconds.
    pub duration: Time,
    pub roster: Vec<RosterEntry>,
    pub schedule: ScheduleConfig,
    pub traders: TraderParams,
    pub seed: u64,
    /// Record wall-clock latency of trader calls. Off by default in the
    /// sequential engine because it makes results differ between runs.
    pub measure_latency: bool,
}

impl SessionConfig {
    pub fn new(roster: Vec<RosterEntry>, seed: u64) -> Self {
        let buyers = roster.iter().filter(|r| r.side == Side::Bid).count();
        SessionConfig {
            duration: 300.0,
            schedule: ScheduleConfig {
                n_per_side: buyers.max(1),
                ..ScheduleConfig::default()
            },
            roster,
            traders: TraderParams::default(),
            seed,
            measure_latency: false,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: String| Err(EngineError::ConfigInvalid(m));
        if !(self.duration > 0.0) {
            return bad("duration must be positive".into());
        }
        if self.roster.is_empty() {
            return bad("roster is empty".into());
        }
        let buyers = self.roster.iter().filter(|r| r.side == Side::Bid).count();
        let sellers = self.roster.len() - buyers;
        if buyers != sellers {
            return bad(format!("{buyers} buyers but {sellers} sellers"));
        }
        if buyers != self.schedule.n_per_side {
            return bad(format!(
                "schedule has n_per_side = {} but roster has {buyers} per side",
                self.schedule.n_per_side
            ));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = self.roster.iter().find(|r| !seen.insert(r.id)) {
            return bad(format!("duplicate trader id {}", dup.id));
        }
        self.schedule
            .validate(self.duration)
            .map_err(|e| EngineError::ConfigInvalid(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    TraderFault(#[from] TraderError),
    #[error("order queue overflow policy violated: {0}")]
    QueueOverflowPolicyViolated(String),
    #[error("activities failed to stop within the drain window: {0}")]
    JoinTimeout(String),
}

/// A transaction with the limits of both parties at the time it executed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeRecord {
    pub txn: Transaction,
    pub buyer_limit: Price,
    pub seller_limit: Price,
}

impl TradeRecord {
    /// Total surplus of the trade; independent of the price.
    pub fn joint_surplus(&self) -> Price {
        self.buyer_limit - self.seller_limit
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraderOutcome {
    pub id: TraderId,
    pub algo: Algo,
    pub side: Side,
    pub profit: Price,
    pub blotter: Vec<Transaction>,
    pub quote_calls: u64,
    pub respond_calls: u64,
    /// Loop iterations (threaded engine) or polls (sequential engine).
    pub iterations: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CallStats {
    pub calls: u64,
    pub mean_us: f64,
    pub p99_us: f64,
}

impl CallStats {
    pub fn from_samples(samples: &mut [f64]) -> Self {
        if samples.is_empty() {
            return CallStats::default();
        }
        samples.sort_by(f64::total_cmp);
        let n = samples.len();
        let idx = ((n as f64 * 0.99).ceil() as usize).clamp(1, n) - 1;
        CallStats {
            calls: n as u64,
            mean_us: samples.iter().sum::<f64>() / n as f64,
            p99_us: samples[idx],
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub quote: CallStats,
    pub respond: CallStats,
}

/// Where a threaded result came from; those runs are not replayable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub parallelism: String,
    pub delay_profile_ms: BTreeMap<Algo, f64>,
    pub host: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    pub seed: u64,
    pub tape: Vec<TradeRecord>,
    pub traders: Vec<TraderOutcome>,
    pub appt_by_algo: BTreeMap<Algo, f64>,
    pub polls: u64,
    pub market_changes: u64,
    pub rejected_orders: u64,
    pub latency: Option<BTreeMap<Algo, LatencyStats>>,
    /// Virtual seconds (sequential) or wall seconds (threaded).
    pub realized_duration: Time,
    pub provenance: Option<Provenance>,
    /// Threaded only: per-producer ordering violations seen by the exchange.
    pub fifo_violations: u64,
}

impl SessionResult {
    pub fn profits(&self) -> BTreeMap<TraderId, Price> {
        self.traders.iter().map(|t| (t.id, t.profit)).collect()
    }

    pub fn total_profit(&self) -> Price {
        self.traders.iter().map(|t| t.profit).sum()
    }

    pub fn transactions(&self) -> Vec<Transaction> {
        self.tape.iter().map(|r| r.txn.clone()).collect()
    }

    /// Mean profit over the traders running each algorithm.
    pub fn compute_appt(traders: &[TraderOutcome]) -> BTreeMap<Algo, f64> {
        let mut acc: BTreeMap<Algo, (Price, usize)> = BTreeMap::new();
        for t in traders {
            let e = acc.entry(t.algo).or_default();
            e.0 += t.profit;
            e.1 += 1;
        }
        acc.into_iter()
            .map(|(a, (sum, n))| (a, sum as f64 / n as f64))
            .collect()
    }

    /// Checks that every trade splits its joint surplus exactly between the
    /// two parties and that trader balances add up to the tape's surplus.
    pub fn check_surplus_conservation(&self) -> Result<(), String> {
        for rec in &self.tape {
            let t = &rec.txn;
            let split = (rec.buyer_limit - t.price) + (t.price - rec.seller_limit);
            if split != rec.joint_surplus() {
                return Err(format!("trade at {} splits surplus incorrectly", t.time));
            }
            if rec.buyer_limit < t.price || rec.seller_limit > t.price {
                return Err(format!(
                    "trade at {} price {} violates limits (buyer {}, seller {})",
                    t.time, t.price, rec.buyer_limit, rec.seller_limit
                ));
            }
        }
        let tape_surplus: Price = self.tape.iter().map(TradeRecord::joint_surplus).sum();
        if tape_surplus != self.total_profit() {
            return Err(format!(
                "tape surplus {tape_surplus} != sum of trader profits {}",
                self.total_profit()
            ));
        }
        Ok(())
    }

    /// Every transaction must appear exactly once in each counterparty's
    /// blotter and nowhere else. Returns the number of discrepancies.
    pub fn lost_fills(&self) -> usize {
        let mut missing = 0;
        for rec in &self.tape {
            for party in [rec.txn.buyer, rec.txn.seller] {
                let count = self
                    .traders
                    .iter()
                    .find(|t| t.id == party)
                    .map_or(0, |t| t.blotter.iter().filter(|b| **b == rec.txn).count());
                if count != 1 {
                    missing += 1;
                }
            }
        }
        let booked: usize = self.traders.iter().map(|t| t.blotter.len()).sum();
        missing + booked.abs_diff(2 * self.tape.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p99_of_uniform_samples() {
        let mut s: Vec<f64> = (1..=100).map(f64::from).collect();
        let c = CallStats::from_samples(&mut s);
        assert_eq!(c.calls, 100);
        assert_eq!(c.p99_us, 99.0);
        assert_eq!(c.mean_us, 50.5);
    }

    fn outcome(id: u32, algo: Algo, side: Side, profit: Price) -> TraderOutcome {
        TraderOutcome {
            id: TraderId(id),
            algo,
            side,
            profit,
            blotter: vec![],
            quote_calls: 0,
            respond_calls: 0,
            iterations: 0,
        }
    }

    #[test]
    fn appt_pools_both_sides() {
        let t = vec![
            outcome(0, Algo::Aa, Side::Bid, 4),
            outcome(1, Algo::Aa, Side::Ask, 6),
            outcome(2, Algo::Zic, Side::Bid, 0),
            outcome(3, Algo::Zic, Side::Ask, 10),
        ];
        let appt = SessionResult::compute_appt(&t);
        assert_eq!(appt[&Algo::Aa], 5.0);
        assert_eq!(appt[&Algo::Zic], 5.0);
    }
}
