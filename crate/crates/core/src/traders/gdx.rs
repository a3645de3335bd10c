//! Belief-function bidding with a dynamic-programming look-ahead.
//!
//! A trader keeps a sliding window of recent shouts and whether each was
//! accepted. From the window it estimates, for any candidate price, the
//! probability that a quote at that price would trade. It then picks the
//! price that maximises expected surplus over its remaining bidding
//! opportunities, discounting the value of waiting by `gamma`.

use serde::{Deserialize, Serialize};

use crate::types::{Price, Side, SYS_MAX, SYS_MIN};

use super::Shout;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GdxParams {
    pub gamma: f64,
    /// Bidding opportunities at the start of a session; one is used up per
    /// assignment round.
    pub horizon: u32,
    /// Number of shouts remembered.
    pub window: usize,
}

impl Default for GdxParams {
    fn default() -> Self {
        GdxParams {
            gamma: 0.9,
            horizon: 10,
            window: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShoutRecord {
    pub side: Side,
    pub price: Price,
    pub accepted: bool,
}

/// No history to form beliefs from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("no shout history yet")]
pub struct ColdStart;

#[derive(Debug, Clone, PartialEq)]
pub struct GdxState {
    pub history: Vec<ShoutRecord>,
    pub capacity: usize,
    pub gamma: f64,
    pub horizon: u32,
    rounds: u32,
    traded_seen: bool,
}

impl GdxState {
    pub fn new(p: &GdxParams) -> Self {
        GdxState {
            history: Vec::with_capacity(p.window + 1),
            capacity: p.window.max(1),
            gamma: p.gamma,
            horizon: p.horizon.max(1),
            rounds: 0,
            traded_seen: false,
        }
    }

    pub fn on_assignment(&mut self) {
        self.rounds += 1;
    }

    /// Bidding opportunities left, counting the current one.
    pub fn remaining(&self) -> u32 {
        self.horizon
            .saturating_sub(self.rounds.saturating_sub(1))
            .max(1)
    }

    /// True until the first trade has been observed.
    pub fn is_cold(&self) -> bool {
        !self.traded_seen || self.history.is_empty()
    }

    pub fn observe(&mut self, shout: &Shout) {
        match shout.trade {
            Some(price) => {
                self.traded_seen = true;
                let resting = shout.side.opposite();
                match self
                    .history
                    .iter_mut()
                    .rev()
                    .find(|r| r.side == resting && r.price == price && !r.accepted)
                {
                    Some(r) => r.accepted = true,
                    None => self.push(ShoutRecord {
                        side: resting,
                        price,
                        accepted: true,
                    }),
                }
                self.push(ShoutRecord {
                    side: shout.side,
                    price: shout.price,
                    accepted: true,
                });
            }
            None => self.push(ShoutRecord {
                side: shout.side,
                price: shout.price,
                accepted: false,
            }),
        }
    }

    fn push(&mut self, r: ShoutRecord) {
        self.history.push(r);
        if self.history.len() > self.capacity {
            let excess = self.history.len() - self.capacity;
            self.history.drain(..excess);
        }
    }
}

/// Raw belief at an observed price, or `None` when nothing bears on it.
fn raw_belief(history: &[ShoutRecord], price: Price, side: Side) -> Option<f64> {
    let (mut favourable, mut rejected) = (0u32, 0u32);
    for r in history {
        match side {
            Side::Bid => {
                // taken bids <= b, asks <= b | rejected bids >= b
                if r.side == Side::Bid && r.accepted && r.price <= price {
                    favourable += 1;
                }
                if r.side == Side::Ask && r.price <= price {
                    favourable += 1;
                }
                if r.side == Side::Bid && !r.accepted && r.price >= price {
                    rejected += 1;
                }
            }
            Side::Ask => {
                // taken asks >= a, bids >= a | rejected asks <= a
                if r.side == Side::Ask && r.accepted && r.price >= price {
                    favourable += 1;
                }
                if r.side == Side::Bid && r.price >= price {
                    favourable += 1;
                }
                if r.side == Side::Ask && !r.accepted && r.price <= price {
                    rejected += 1;
                }
            }
        }
    }
    let total = favourable + rejected;
    (total > 0).then(|| favourable as f64 / total as f64)
}

/// Interpolation anchors: band edges plus every observed price, ascending.
fn anchors(history: &[ShoutRecord], side: Side) -> Vec<(Price, f64)> {
    let (at_min, at_max) = match side {
        Side::Bid => (0.0, 1.0),
        Side::Ask => (1.0, 0.0),
    };
    let mut prices: Vec<Price> = history
        .iter()
        .map(|r| r.price)
        .filter(|p| *p > SYS_MIN && *p < SYS_MAX)
        .collect();
    prices.sort_unstable();
    prices.dedup();
    let mut pts = Vec::with_capacity(prices.len() + 2);
    pts.push((SYS_MIN, at_min));
    pts.extend(
        prices
            .into_iter()
            .filter_map(|p| raw_belief(history, p, side).map(|b| (p, b))),
    );
    pts.push((SYS_MAX, at_max));
    pts
}

fn interpolate(pts: &[(Price, f64)], price: Price) -> f64 {
    let i = pts.partition_point(|(p, _)| *p < price);
    if i < pts.len() && pts[i].0 == price {
        return pts[i].1;
    }
    if i == 0 {
        return pts[0].1;
    }
    if i == pts.len() {
        return pts[pts.len() - 1].1;
    }
    let (p0, b0) = pts[i - 1];
    let (p1, b1) = pts[i];
    b0 + (b1 - b0) * (price - p0) as f64 / (p1 - p0) as f64
}

/// Probability that a quote at `price` on `side` would be accepted, given the
/// shout history. Exact counts at observed prices, linear in between, 0 and 1
/// at the band edges.
pub fn gd_belief(history: &[ShoutRecord], price: Price, side: Side) -> Result<f64, ColdStart> {
    if history.is_empty() {
        return Err(ColdStart);
    }
    Ok(interpolate(&anchors(history, side), price.clamp(SYS_MIN, SYS_MAX)))
}

/// Belief at every price in the band; index `i` is price `SYS_MIN + i`.
pub fn belief_curve(history: &[ShoutRecord], side: Side) -> Result<Vec<f64>, ColdStart> {
    if history.is_empty() {
        return Err(ColdStart);
    }
    let pts = anchors(history, side);
    let mut out = Vec::with_capacity((SYS_MAX - SYS_MIN + 1) as usize);
    for w in pts.windows(2) {
        let (p0, b0) = w[0];
        let (p1, b1) = w[1];
        let span = (p1 - p0) as f64;
        for p in p0..p1 {
            out.push(b0 + (b1 - b0) * (p - p0) as f64 / span);
        }
    }
    out.push(pts[pts.len() - 1].1);
    Ok(out)
}

/// Value iteration over candidate `(price, p_accept, surplus)` triples:
/// `V(k) = max_p [ f(p) s(p) + (1 - f(p)) gamma V(k-1) ]`, `V(0) = 0`.
///
/// Returns `V(0..=n)` and the first price attaining the maximum at `n`.
pub fn gdx_value_iteration(
    candidates: &[(Price, f64, f64)],
    gamma: f64,
    n: u32,
) -> (Vec<f64>, Option<Price>) {
    let mut values = vec![0.0];
    let mut best_price = None;
    for _ in 0..n {
        let carry = gamma * values[values.len() - 1];
        let mut best = 0.0;
        best_price = None;
        for &(price, f, s) in candidates {
            let ev = f * s + (1.0 - f) * carry;
            if ev > best {
                best = ev;
                best_price = Some(price);
            }
        }
        values.push(best);
    }
    (values, best_price)
}

/// Chooses the quote maximising expected surplus over the remaining
/// opportunities. `Ok(None)` means abstain (no price has positive value).
/// Returns the price together with its value.
pub fn gdx_choose_price(
    limit: Price,
    side: Side,
    state: &GdxState,
) -> Result<Option<(Price, f64)>, ColdStart> {
    let curve = belief_curve(&state.history, side)?;
    let belief = |p: Price| curve[(p - SYS_MIN) as usize];
    let candidates: Vec<(Price, f64, f64)> = match side {
        Side::Bid => (SYS_MIN..=limit.min(SYS_MAX))
            .map(|p| (p, belief(p), (limit - p) as f64))
            .collect(),
        Side::Ask => (limit.max(SYS_MIN)..=SYS_MAX)
            .map(|p| (p, belief(p), (p - limit) as f64))
            .collect(),
    };
    let (values, price) = gdx_value_iteration(&candidates, state.gamma, state.remaining());
    Ok(price.map(|p| (p, values[values.len() - 1])))
}
