//! Zero-intelligence-plus: a profit margin on the limit price, adapted by a
//! Widrow-Hoff rule with momentum toward perturbed targets derived from the
//! last shout.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::market::Assignment;
use crate::types::{clamp_price, round_half_up, Price, Side};

use super::Shout;

/// Ranges for the per-trader draws made at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ZipParams {
    pub beta_min: f64,
    pub beta_max: f64,
    pub momentum_min: f64,
    pub momentum_max: f64,
    pub margin_min: f64,
    pub margin_max: f64,
    /// Relative target perturbation: R is drawn from `[1, 1 + rel]` when
    /// pushing a price up and `[1 - rel, 1]` when pushing it down.
    pub rel_perturb: f64,
    /// Absolute target perturbation in ticks, drawn from `[0, abs]`.
    pub abs_perturb: f64,
}

impl Default for ZipParams {
    fn default() -> Self {
        ZipParams {
            beta_min: 0.1,
            beta_max: 0.5,
            momentum_min: 0.0,
            momentum_max: 0.1,
            margin_min: 0.05,
            margin_max: 0.35,
            rel_perturb: 0.05,
            abs_perturb: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZipState {
    /// In `[-1, 0]`.
    pub margin_buy: f64,
    /// In `[0, inf)`.
    pub margin_sell: f64,
    pub learn_rate: f64,
    pub momentum_coeff: f64,
    /// Momentum-smoothed last price change.
    pub momentum: f64,
    pub limit: Option<Price>,
    pub last_shout_price: Option<Price>,
    side: Side,
    rel_perturb: f64,
    abs_perturb: f64,
}

impl ZipState {
    pub fn new<R: Rng + ?Sized>(p: &ZipParams, side: Side, rng: &mut R) -> Self {
        let draw = |rng: &mut R, lo: f64, hi: f64| {
            if hi > lo {
                rng.random_range(lo..hi)
            } else {
                lo
            }
        };
        let learn_rate = draw(rng, p.beta_min, p.beta_max);
        let momentum_coeff = draw(rng, p.momentum_min, p.momentum_max);
        let margin_buy = -draw(rng, p.margin_min, p.margin_max);
        let margin_sell = draw(rng, p.margin_min, p.margin_max);
        ZipState {
            margin_buy,
            margin_sell,
            learn_rate,
            momentum_coeff,
            momentum: 0.0,
            limit: None,
            last_shout_price: None,
            side,
            rel_perturb: p.rel_perturb,
            abs_perturb: p.abs_perturb,
        }
    }

    pub fn with_fixed(side: Side, margin_buy: f64, margin_sell: f64, learn_rate: f64, momentum_coeff: f64) -> Self {
        ZipState {
            margin_buy,
            margin_sell,
            learn_rate,
            momentum_coeff,
            momentum: 0.0,
            limit: None,
            last_shout_price: None,
            side,
            rel_perturb: ZipParams::default().rel_perturb,
            abs_perturb: ZipParams::default().abs_perturb,
        }
    }

    pub fn set_limit(&mut self, limit: Price) {
        self.limit = Some(limit);
    }

    fn margin(&self, side: Side) -> f64 {
        match side {
            Side::Bid => self.margin_buy,
            Side::Ask => self.margin_sell,
        }
    }

    /// Current real-valued shout price for `side`, if a limit is known.
    pub fn price(&self, side: Side) -> Option<f64> {
        self.limit.map(|l| l as f64 * (1.0 + self.margin(side)))
    }

    fn target_up<R: Rng + ?Sized>(&self, q: f64, rng: &mut R) -> f64 {
        let r = 1.0 + self.rel_perturb * rng.random::<f64>();
        let a = self.abs_perturb * rng.random::<f64>();
        r * q + a
    }

    fn target_down<R: Rng + ?Sized>(&self, q: f64, rng: &mut R) -> f64 {
        let r = 1.0 - self.rel_perturb * rng.random::<f64>();
        let a = self.abs_perturb * rng.random::<f64>();
        r * q - a
    }

    /// Moves the shout price toward `target` and re-derives the margin.
    pub fn adjust(&mut self, side: Side, target: f64) {
        let (Some(limit), Some(p)) = (self.limit, self.price(side)) else {
            return;
        };
        let (next, m) = zip_price_step(p, target, self.learn_rate, self.momentum_coeff, self.momentum);
        self.momentum = m;
        let margin = next / limit as f64 - 1.0;
        match side {
            Side::Bid => self.margin_buy = margin.clamp(-1.0, 0.0),
            Side::Ask => self.margin_sell = margin.max(0.0),
        }
    }

    /// Applies the margin-update rule table to one shout.
    ///
    /// Sellers raise their price after any trade at or above it, and lower it
    /// when an active seller is priced above a trade that lifted an ask or
    /// above an untraded ask. Buyers mirror this.
    pub fn respond<R: Rng + ?Sized>(&mut self, shout: &Shout, active: bool, rng: &mut R) {
        self.last_shout_price = Some(shout.price);
        let side = self.side;
        let Some(p) = self.price(side) else {
            return;
        };
        match (side, shout.trade) {
            (Side::Ask, Some(q)) => {
                let q = q as f64;
                if p <= q {
                    let t = self.target_up(q, rng);
                    self.adjust(side, t);
                } else if shout.side == Side::Bid && active {
                    let t = self.target_down(q, rng);
                    self.adjust(side, t);
                }
            }
            (Side::Ask, None) => {
                let q = shout.price as f64;
                if shout.side == Side::Ask && active && p >= q {
                    let t = self.target_down(q, rng);
                    self.adjust(side, t);
                }
            }
            (Side::Bid, Some(q)) => {
                let q = q as f64;
                if p >= q {
                    let t = self.target_down(q, rng);
                    self.adjust(side, t);
                } else if shout.side == Side::Ask && active {
                    let t = self.target_up(q, rng);
                    self.adjust(side, t);
                }
            }
            (Side::Bid, None) => {
                let q = shout.price as f64;
                if shout.side == Side::Bid && active && p <= q {
                    let t = self.target_up(q, rng);
                    self.adjust(side, t);
                }
            }
        }
    }
}

/// One Widrow-Hoff step with momentum. Returns `(new_price, new_momentum)`.
pub fn zip_price_step(price: f64, target: f64, beta: f64, gamma: f64, momentum: f64) -> (f64, f64) {
    let delta = beta * (target - price);
    let m = gamma * momentum + (1.0 - gamma) * delta;
    (price + m, m)
}

/// `round(limit * (1 + margin))` for the assignment's side.
pub fn zip_quote(state: &ZipState, asg: &Assignment) -> Price {
    let margin = state.margin(asg.side);
    let p = round_half_up(asg.limit as f64 * (1.0 + margin));
    let p = match asg.side {
        Side::Bid => p.min(asg.limit),
        Side::Ask => p.max(asg.limit),
    };
    clamp_price(p)
}
