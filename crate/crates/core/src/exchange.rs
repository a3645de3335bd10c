//! Limit order book and matching engine.
//!
//! The book holds at most one resting order per trader. A new order from a
//! trader cancels whatever that trader had resting (on either side) before it
//! is matched, so a trader can never trade with itself. An order that crosses
//! the opposite best quote trades immediately, in full, at the resting order's
//! price; otherwise it rests. Priority within a price level is arrival order.
//!
//! The book does no locking: the engine that owns it serialises access.

use std::cmp::Reverse;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::io;

use serde::{Deserialize, Serialize};

use crate::types::{OrderId, Price, Side, Time, TraderId, SYS_MAX, SYS_MIN};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Order {
    pub id: OrderId,
    pub trader: TraderId,
    pub side: Side,
    pub price: Price,
    /// Always 1.
    pub quantity: u32,
    pub time: Time,
}

impl Order {
    pub fn new(id: OrderId, trader: TraderId, side: Side, price: Price, time: Time) -> Self {
        Order {
            id,
            trader,
            side,
            price,
            quantity: 1,
            time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transaction {
    pub price: Price,
    pub buyer: TraderId,
    pub seller: TraderId,
    pub time: Time,
    /// Side of the order that was already on the book.
    pub resting_side: Side,
}

impl Transaction {
    pub fn involves(&self, trader: TraderId) -> bool {
        self.buyer == trader || self.seller == trader
    }

    /// The counterparty of `trader` in this trade, if `trader` took part.
    pub fn counterparty(&self, trader: TraderId) -> Option<TraderId> {
        if self.buyer == trader {
            Some(self.seller)
        } else if self.seller == trader {
            Some(self.buyer)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SubmitOutcome {
    /// The order rests and the trader had nothing on the book before.
    Rested,
    /// The order rests and replaced the trader's previous resting order.
    Replaced,
    Traded(Transaction),
}

impl SubmitOutcome {
    pub fn transaction(&self) -> Option<&Transaction> {
        match self {
            SubmitOutcome::Traded(t) => Some(t),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExchangeError {
    #[error("price {price} outside [{SYS_MIN}, {SYS_MAX}]")]
    PriceOutOfBand { price: Price },
    #[error("trader {0} is not registered with this book")]
    UnknownTrader(TraderId),
}

/// Anonymised public view of the book.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MarketSnapshot {
    pub best_bid: Option<Price>,
    pub best_ask: Option<Price>,
    pub bid_depth: usize,
    pub ask_depth: usize,
    pub last_trade_price: Option<Price>,
    /// Trades strictly after the `since` time the snapshot was taken with.
    pub recent_tape: Vec<Transaction>,
    pub time: Time,
}

#[derive(Debug, Clone, Copy)]
struct Resting {
    side: Side,
    price: Price,
    seq: u64,
}

#[derive(Debug, Clone, Default)]
pub struct LimitOrderBook {
    bids: BTreeMap<(Reverse<Price>, u64), Order>,
    asks: BTreeMap<(Price, u64), Order>,
    resting: HashMap<TraderId, Resting>,
    traders: HashSet<TraderId>,
    tape: Vec<Transaction>,
    arrivals: u64,
    now: Time,
}

impl LimitOrderBook {
    pub fn with_traders<I: IntoIterator<Item = TraderId>>(traders: I) -> Self {
        LimitOrderBook {
            traders: traders.into_iter().collect(),
            ..Default::default()
        }
    }

    pub fn register(&mut self, trader: TraderId) {
        self.traders.insert(trader);
    }

    pub fn submit_order(&mut self, order: Order) -> Result<SubmitOutcome, ExchangeError> {
        if !(SYS_MIN..=SYS_MAX).contains(&order.price) {
            return Err(ExchangeError::PriceOutOfBand { price: order.price });
        }
        if !self.traders.contains(&order.trader) {
            return Err(ExchangeError::UnknownTrader(order.trader));
        }
        if order.time > self.now {
            self.now = order.time;
        }
        let replaced = self.withdraw(order.trader).is_some();

        let crossing = match order.side {
            Side::Bid => self
                .asks
                .first_key_value()
                .filter(|(_, ask)| ask.price <= order.price)
                .map(|(k, _)| *k),
            Side::Ask => self
                .bids
                .first_key_value()
                .filter(|(_, bid)| bid.price >= order.price)
                .map(|(&(Reverse(p), seq), _)| (p, seq)),
        };

        if let Some(key) = crossing {
            let resting = match order.side {
                Side::Bid => self.asks.remove(&key),
                Side::Ask => self.bids.remove(&(Reverse(key.0), key.1)),
            }
            .expect("crossing key taken from the book");
            self.resting.remove(&resting.trader);
            let (buyer, seller) = match order.side {
                Side::Bid => (order.trader, resting.trader),
                Side::Ask => (resting.trader, order.trader),
            };
            let txn = Transaction {
                price: resting.price,
                buyer,
                seller,
                time: self.now,
                resting_side: resting.side,
            };
            self.tape.push(txn.clone());
            return Ok(SubmitOutcome::Traded(txn));
        }

        let seq = self.arrivals;
        self.arrivals += 1;
        self.resting.insert(
            order.trader,
            Resting {
                side: order.side,
                price: order.price,
                seq,
            },
        );
        match order.side {
            Side::Bid => self.bids.insert((Reverse(order.price), seq), order),
            Side::Ask => self.asks.insert((order.price, seq), order),
        };
        Ok(if replaced {
            SubmitOutcome::Replaced
        } else {
            SubmitOutcome::Rested
        })
    }

    /// Removes `trader`'s resting order, if any.
    pub fn withdraw(&mut self, trader: TraderId) -> Option<Order> {
        let r = self.resting.remove(&trader)?;
        match r.side {
            Side::Bid => self.bids.remove(&(Reverse(r.price), r.seq)),
            Side::Ask => self.asks.remove(&(r.price, r.seq)),
        }
    }

    /// Drops every resting order. The tape is kept.
    pub fn clear_orders(&mut self) {
        self.bids.clear();
        self.asks.clear();
        self.resting.clear();
    }

    pub fn best_bid(&self) -> Option<Price> {
        self.bids.first_key_value().map(|(_, o)| o.price)
    }

    pub fn best_ask(&self) -> Option<Price> {
        self.asks.first_key_value().map(|(_, o)| o.price)
    }

    pub fn bid_depth(&self) -> usize {
        self.bids.len()
    }

    pub fn ask_depth(&self) -> usize {
        self.asks.len()
    }

    pub fn resting_order(&self, trader: TraderId) -> Option<&Order> {
        let r = self.resting.get(&trader)?;
        match r.side {
            Side::Bid => self.bids.get(&(Reverse(r.price), r.seq)),
            Side::Ask => self.asks.get(&(r.price, r.seq)),
        }
    }

    /// Bids in priority order.
    pub fn bids(&self) -> impl Iterator<Item = &Order> {
        self.bids.values()
    }

    /// Asks in priority order.
    pub fn asks(&self) -> impl Iterator<Item = &Order> {
        self.asks.values()
    }

    pub fn tape(&self) -> &[Transaction] {
        &self.tape
    }

    pub fn into_tape(self) -> Vec<Transaction> {
        self.tape
    }

    pub fn snapshot(&self, since: Time) -> MarketSnapshot {
        let start = self
            .tape
            .iter()
            .rposition(|t| t.time <= since)
            .map_or(0, |i| i + 1);
        MarketSnapshot {
            best_bid: self.best_bid(),
            best_ask: self.best_ask(),
            bid_depth: self.bids.len(),
            ask_depth: self.asks.len(),
            last_trade_price: self.tape.last().map(|t| t.price),
            recent_tape: self.tape[start..].to_vec(),
            time: self.now,
        }
    }
}

/// Writes `time,price,buyer_id,seller_id,resting_side` rows with a header.
pub fn write_tape_csv<W: io::Write>(tape: &[Transaction], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "price", "buyer_id", "seller_id", "resting_side"])?;
    for t in tape {
        w.write_record([
            t.time.to_string(),
            t.price.to_string(),
            t.buyer.to_string(),
            t.seller.to_string(),
            t.resting_side.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
