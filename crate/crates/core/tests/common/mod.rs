//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use cdasim::exchange::{LimitOrderBook, Order, SubmitOutcome};
use cdasim::session::RosterEntry;
use cdasim::{Algo, OrderId, Price, Side, TraderId, SYS_MAX, SYS_MIN};
use rand::Rng;

/// One order in a random stream: (trader, side, price).
pub type StreamOrder = (u32, Side, Price);

/// (price, buyer, seller) for each trade, in execution order.
pub type Trades = Vec<(Price, u32, u32)>;

/// Brute-force reference book: a flat list scanned on every arrival.
/// Deliberately shares no code with the real book.
pub fn oracle_trades(stream: &[StreamOrder]) -> Trades {
    // (trader, side, price, arrival)
    let mut resting: Vec<(u32, Side, Price, usize)> = Vec::new();
    let mut trades = Vec::new();
    for (arrival, &(trader, side, price)) in stream.iter().enumerate() {
        if !(SYS_MIN..=SYS_MAX).contains(&price) {
            continue;
        }
        resting.retain(|r| r.0 != trader);
        let mut best: Option<usize> = None;
        for (i, r) in resting.iter().enumerate() {
            let crosses = match side {
                Side::Bid => r.1 == Side::Ask && r.2 <= price,
                Side::Ask => r.1 == Side::Bid && r.2 >= price,
            };
            if !crosses {
                continue;
            }
            let better = match best {
                None => true,
                Some(j) => {
                    let b = resting[j];
                    let price_better = match side {
                        Side::Bid => r.2 < b.2,
                        Side::Ask => r.2 > b.2,
                    };
                    price_better || (r.2 == b.2 && r.3 < b.3)
                }
            };
            if better {
                best = Some(i);
            }
        }
        match best {
            Some(i) => {
                let r = resting.remove(i);
                let (buyer, seller) = match side {
                    Side::Bid => (trader, r.0),
                    Side::Ask => (r.0, trader),
                };
                trades.push((r.2, buyer, seller));
            }
            None => resting.push((trader, side, price, arrival)),
        }
    }
    trades
}

/// Runs `stream` through the real book.
pub fn book_trades(stream: &[StreamOrder], traders: u32) -> Trades {
    let mut book = LimitOrderBook::with_traders((0..traders).map(TraderId));
    let mut trades = Vec::new();
    for (i, &(trader, side, price)) in stream.iter().enumerate() {
        let order = Order::new(OrderId(i as u64), TraderId(trader), side, price, i as f64);
        if let Ok(SubmitOutcome::Traded(t)) = book.submit_order(order) {
            trades.push((t.price, t.buyer.0, t.seller.0));
        }
    }
    trades
}

pub fn random_stream<R: Rng>(rng: &mut R, traders: u32, max_len: usize, lo: Price, hi: Price) -> Vec<StreamOrder> {
    let len = rng.random_range(0..=max_len);
    (0..len)
        .map(|_| {
            let side = if rng.random::<bool>() { Side::Bid } else { Side::Ask };
            (rng.random_range(0..traders), side, rng.random_range(lo..=hi))
        })
        .collect()
}

pub fn homogeneous_roster(algo: Algo, per_side: u32) -> Vec<RosterEntry> {
    mixed_roster(&[algo], per_side)
}

/// Cycles through `algos` on each side.
pub fn mixed_roster(algos: &[Algo], per_side: u32) -> Vec<RosterEntry> {
    (0..2 * per_side)
        .map(|i| RosterEntry {
            id: TraderId(i),
            algo: algos[(i % per_side) as usize % algos.len()],
            side: if i < per_side { Side::Bid } else { Side::Ask },
        })
        .collect()
}
