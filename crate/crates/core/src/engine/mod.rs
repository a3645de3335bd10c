//! Session engines: a deterministic time-sliced loop and a concurrent one.

mod sequential;
mod threaded;

pub use sequential::run_session_sequential;
pub use threaded::{
    run_session_threaded, DelayKind, Parallelism, ThreadedConfig, DEFAULT_QUEUE_CAPACITY,
};

use std::collections::BTreeMap;

use crate::seed;
use crate::session::{CallStats, LatencyStats, SessionConfig};
use crate::traders::Trader;
use crate::types::{Algo, TraderId};

/// Builds every trader with a random source derived from the session seed and
/// its own id, so behaviour does not depend on roster position.
pub(crate) fn build_traders(cfg: &SessionConfig) -> Vec<Trader> {
    cfg.roster
        .iter()
        .map(|r| {
            let s = seed::derive(cfg.seed, &[seed::STREAM_TRADER, u64::from(r.id.0)]);
            Trader::new(r.id, r.algo, r.side, &cfg.traders, s)
        })
        .collect()
}

/// Raw per-call latency samples in microseconds, grouped by algorithm.
#[derive(Debug, Default)]
pub(crate) struct LatencySamples {
    quote: BTreeMap<Algo, Vec<f64>>,
    respond: BTreeMap<Algo, Vec<f64>>,
}

impl LatencySamples {
    pub fn quote(&mut self, algo: Algo, us: f64) {
        self.quote.entry(algo).or_default().push(us);
    }

    pub fn respond(&mut self, algo: Algo, us: f64) {
        self.respond.entry(algo).or_default().push(us);
    }

    pub fn merge(&mut self, other: LatencySamples) {
        for (a, v) in other.quote {
            self.quote.entry(a).or_default().extend(v);
        }
        for (a, v) in other.respond {
            self.respond.entry(a).or_default().extend(v);
        }
    }

    pub fn summarize(mut self, algos: impl IntoIterator<Item = Algo>) -> BTreeMap<Algo, LatencyStats> {
        algos
            .into_iter()
            .map(|a| {
                let q = self.quote.get_mut(&a).map(|v| CallStats::from_samples(v));
                let r = self.respond.get_mut(&a).map(|v| CallStats::from_samples(v));
                (
                    a,
                    LatencyStats {
                        quote: q.unwrap_or_default(),
                        respond: r.unwrap_or_default(),
                    },
                )
            })
            .collect()
    }
}

pub(crate) fn roster_pairs(cfg: &SessionConfig) -> Vec<(TraderId, crate::types::Side)> {
    cfg.roster.iter().map(|r| (r.id, r.side)).collect()
}
