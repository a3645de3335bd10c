use std::collections::HashMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exchange::{LimitOrderBook, Order, SubmitOutcome};
use crate::market::issue_assignments;
use crate::seed;
use crate::session::{
    EngineError, SessionConfig, SessionResult, TradeRecord, TraderOutcome,
};
use crate::traders::Shout;
use crate::types::OrderId;

use super::{build_traders, roster_pairs, LatencySamples};

/// Runs one session on a virtual clock that advances `1/N` seconds per poll.
///
/// Each poll picks one trader uniformly at random and asks it for a quote.
/// Whenever the book changes, every trader sees the resulting shout. The result
/// depends only on `cfg`; how long trader calls take never matters.
pub fn run_session_sequential(cfg: &SessionConfig) -> Result<SessionResult, EngineError> {
    cfg.validate()?;
    let n = cfg.roster.len();
    let mut traders = build_traders(cfg);
    let index: HashMap<_, _> = traders.iter().enumerate().map(|(i, t)| (t.id(), i)).collect();
    let pairs = roster_pairs(cfg);

    let mut select = ChaCha8Rng::seed_from_u64(seed::derive(cfg.seed, &[seed::STREAM_SELECT]));
    let mut sched = ChaCha8Rng::seed_from_u64(seed::derive(cfg.seed, &[seed::STREAM_SCHEDULE]));
    let mut book = LimitOrderBook::with_traders(traders.iter().map(|t| t.id()));

    let mut tape = Vec::new();
    let mut quote_calls = vec![0u64; n];
    let mut respond_calls = vec![0u64; n];
    let mut polls = vec![0u64; n];
    let mut latency = cfg.measure_latency.then(LatencySamples::default);
    let mut market_changes = 0u64;
    let mut rejected = 0u64;
    let mut next_order = 0u64;
    let mut next_replenish = 0u64;
    let mut last_change = f64::NEG_INFINITY;

    let mut k = 0u64;
    loop {
        let t = k as f64 / n as f64;
        if t >= cfg.duration {
            break;
        }
        let boundary = next_replenish as f64 * cfg.schedule.replenish_interval;
        if t >= boundary {
            let issued = issue_assignments(boundary, &pairs, &cfg.schedule, &mut sched)
                .map_err(|e| EngineError::ConfigInvalid(e.to_string()))?;
            book.clear_orders();
            for a in issued {
                traders[index[&a.trader]].assign(a);
            }
            next_replenish += 1;
        }

        let i = select.random_range(0..n);
        polls[i] += 1;
        quote_calls[i] += 1;
        let snap = book.snapshot(t);
        let started = latency.as_ref().map(|_| Instant::now());
        let quoted = traders[i].quote(&snap)?;
        if let (Some(l), Some(s)) = (latency.as_mut(), started) {
            l.quote(traders[i].algo(), s.elapsed().as_secs_f64() * 1e6);
        }
        k += 1;

        let Some(price) = quoted else { continue };
        let side = traders[i].side();
        let order = Order::new(OrderId(next_order), traders[i].id(), side, price, t);
        next_order += 1;
        let outcome = match book.submit_order(order) {
            Ok(o) => o,
            Err(_) => {
                rejected += 1;
                continue;
            }
        };
        let trade = match outcome {
            SubmitOutcome::Traded(txn) => {
                let b = index[&txn.buyer];
                let s = index[&txn.seller];
                let limit = |idx: usize| {
                    traders[idx]
                        .common
                        .active_assignment
                        .map(|a| a.limit)
                };
                let (Some(buyer_limit), Some(seller_limit)) = (limit(b), limit(s)) else {
                    return Err(EngineError::TraderFault(
                        crate::traders::TraderError::FillWithoutAssignment(
                            if limit(b).is_none() { txn.buyer } else { txn.seller },
                        ),
                    ));
                };
                traders[b].on_fill(&txn)?;
                traders[s].on_fill(&txn)?;
                let price = txn.price;
                tape.push(TradeRecord {
                    txn,
                    buyer_limit,
                    seller_limit,
                });
                Some(price)
            }
            SubmitOutcome::Rested | SubmitOutcome::Replaced => None,
        };

        market_changes += 1;
        let shout = [Shout {
            side,
            price,
            trade,
            time: t,
        }];
        let view = book.snapshot(last_change);
        last_change = t;
        for (j, trader) in traders.iter_mut().enumerate() {
            respond_calls[j] += 1;
            let started = latency.as_ref().map(|_| Instant::now());
            trader.respond(&view, &shout);
            if let (Some(l), Some(s)) = (latency.as_mut(), started) {
                l.respond(trader.algo(), s.elapsed().as_secs_f64() * 1e6);
            }
        }
    }

    let outcomes: Vec<TraderOutcome> = traders
        .into_iter()
        .enumerate()
        .map(|(i, t)| TraderOutcome {
            id: t.id(),
            algo: t.algo(),
            side: t.side(),
            profit: t.balance(),
            blotter: t.common.blotter,
            quote_calls: quote_calls[i],
            respond_calls: respond_calls[i],
            iterations: polls[i],
        })
        .collect();
    let algos: Vec<_> = outcomes.iter().map(|o| o.algo).collect();
    Ok(SessionResult {
        seed: cfg.seed,
        appt_by_algo: SessionResult::compute_appt(&outcomes),
        tape,
        traders: outcomes,
        polls: k,
        market_changes,
        rejected_orders: rejected,
        latency: latency.map(|l| l.summarize(algos)),
        realized_duration: k as f64 / n as f64,
        provenance: None,
        fifo_violations: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::RosterEntry;
    use crate::types::{Algo, Side, TraderId};

    fn roster(algo: Algo, per_side: u32) -> Vec<RosterEntry> {
        (0..2 * per_side)
            .map(|i| RosterEntry {
                id: TraderId(i),
                algo,
                side: if i < per_side { Side::Bid } else { Side::Ask },
            })
            .collect()
    }

    #[test]
    fn poll_count_depends_only_on_duration_and_population() {
        for algo in [Algo::Zic, Algo::Gdx] {
            let cfg = SessionConfig::new(roster(algo, 20), 11);
            let r = run_session_sequential(&cfg).unwrap();
            assert_eq!(r.polls, 12_000);
            assert_eq!(r.traders.iter().map(|t| t.iterations).sum::<u64>(), 12_000);
        }
    }

    #[test]
    fn every_trader_responds_to_every_change() {
        let cfg = SessionConfig::new(roster(Algo::Zip, 5), 3);
        let r = run_session_sequential(&cfg).unwrap();
        assert!(r.market_changes > 0);
        assert!(r.traders.iter().all(|t| t.respond_calls == r.market_changes));
        r.check_surplus_conservation().unwrap();
    }

    #[test]
    fn unbalanced_roster_is_rejected() {
        let mut cfg = SessionConfig::new(roster(Algo::Zic, 3), 1);
        cfg.roster.pop();
        assert!(matches!(
            run_session_sequential(&cfg),
            Err(EngineError::ConfigInvalid(_))
        ));
    }
}
