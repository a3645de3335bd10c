//! Adaptive-aggressive trading.
//!
//! The trader tracks an estimate of the equilibrium price from recent trades
//! and an aggressiveness `r` in `[-1, 1]`. A target price is a function of
//! `r`, the shape parameter `theta`, the limit and the equilibrium estimate:
//! `r = 0` targets the estimate itself, `r = 1` the limit, `r = -1` the far
//! band edge. Quotes step a fraction `1/eta` of the way from the current best
//! same-side quote toward the target.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::exchange::MarketSnapshot;
use crate::market::Assignment;
use crate::types::{clamp_price, round_half_up, Price, Side, SYS_MAX, SYS_MIN};

use super::{zic_quote, Shout};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AaParams {
    pub theta_min: f64,
    pub theta_max: f64,
    /// Quote-improvement divisor.
    pub eta: f64,
    /// Geometric decay of trade weights in the equilibrium estimate.
    pub rho: f64,
    /// Number of recent trades kept.
    pub window: usize,
    /// Learning rate for aggressiveness.
    pub beta1: f64,
    /// Learning rate for theta.
    pub beta2: f64,
    pub lambda_r: f64,
    pub lambda_a: f64,
    pub alpha_max: f64,
    pub initial_r_min: f64,
    pub initial_r_max: f64,
    pub initial_theta: f64,
}

impl Default for AaParams {
    fn default() -> Self {
        AaParams {
            theta_min: -8.0,
            theta_max: 2.0,
            eta: 3.0,
            rho: 0.9,
            window: 30,
            beta1: 0.4,
            beta2: 0.3,
            lambda_r: 0.05,
            lambda_a: 0.01,
            alpha_max: 0.3,
            initial_r_min: -0.3,
            initial_r_max: 0.0,
            initial_theta: -3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("no equilibrium estimate available")]
pub struct MissingEquilibrium;

#[derive(Debug, Clone, PartialEq)]
pub struct AaState {
    /// Aggressiveness in `[-1, 1]`.
    pub r: f64,
    /// Shape in `[theta_min, theta_max]`.
    pub theta: f64,
    pub equilibrium: Option<f64>,
    /// Recent trade prices, newest first.
    pub trades: Vec<Price>,
    pub limit: Option<Price>,
    side: Side,
    params: AaParams,
}

impl AaState {
    pub fn new<R: Rng + ?Sized>(p: &AaParams, side: Side, rng: &mut R) -> Self {
        let r = if p.initial_r_max > p.initial_r_min {
            rng.random_range(p.initial_r_min..p.initial_r_max)
        } else {
            p.initial_r_min
        };
        AaState {
            r: r.clamp(-1.0, 1.0),
            theta: p.initial_theta.clamp(p.theta_min, p.theta_max),
            equilibrium: None,
            trades: Vec::with_capacity(p.window + 1),
            limit: None,
            side,
            params: p.clone(),
        }
    }

    pub fn with_fixed(p: &AaParams, side: Side, r: f64, theta: f64) -> Self {
        AaState {
            r,
            theta,
            equilibrium: None,
            trades: Vec::new(),
            limit: None,
            side,
            params: p.clone(),
        }
    }

    pub fn params(&self) -> &AaParams {
        &self.params
    }

    pub fn set_limit(&mut self, limit: Price) {
        self.limit = Some(limit);
    }

    /// Current target price, if an equilibrium estimate and a limit exist.
    pub fn target(&self) -> Option<f64> {
        let limit = self.limit?;
        aa_target_price(self.r, self.theta, limit, self.equilibrium, self.side).ok()
    }

    /// Normalised standard deviation of the trade window around the estimate.
    pub fn volatility(&self) -> Option<f64> {
        let eq = self.equilibrium?;
        if self.trades.is_empty() || eq <= 0.0 {
            return None;
        }
        let n = self.trades.len() as f64;
        let var = self
            .trades
            .iter()
            .map(|&p| (p as f64 - eq).powi(2))
            .sum::<f64>()
            / n;
        Some(var.sqrt() / eq)
    }

    pub fn update(&mut self, shout: &Shout) {
        let p = &self.params;
        if let Some(q) = shout.trade {
            self.trades.insert(0, q);
            self.trades.truncate(p.window.max(1));
            self.equilibrium = aa_estimate_equilibrium(&self.trades, p.rho);
            if let Some(alpha) = self.volatility() {
                let norm = (alpha / p.alpha_max).min(1.0);
                let theta_star = p.theta_min + (p.theta_max - p.theta_min) * (1.0 - norm);
                self.theta += p.beta2 * (theta_star - self.theta);
                self.theta = self.theta.clamp(p.theta_min, p.theta_max);
            }
        }

        let (Some(eq), Some(limit)) = (self.equilibrium, self.limit) else {
            return;
        };
        let Ok(tau) = aa_target_price(self.r, self.theta, limit, Some(eq), self.side) else {
            return;
        };
        let invert = |price: Price| aa_invert_target(price as f64, self.theta, limit, eq, self.side);
        let step = |r_shout: f64| p.lambda_r * r_shout.abs() + p.lambda_a;
        let more = |r_shout: f64| r_shout + step(r_shout);
        let less = |r_shout: f64| r_shout - step(r_shout);

        let q = shout.trade;
        let delta = match (self.side, q) {
            // Would this trader's target have traded at q? Then it was too
            // eager and backs off; otherwise it pushes harder.
            (Side::Bid, Some(q)) => {
                let rs = invert(q);
                if tau >= q as f64 {
                    less(rs)
                } else {
                    more(rs)
                }
            }
            (Side::Ask, Some(q)) => {
                let rs = invert(q);
                if tau <= q as f64 {
                    less(rs)
                } else {
                    more(rs)
                }
            }
            (Side::Bid, None) if shout.side == Side::Bid && tau <= shout.price as f64 => {
                more(invert(shout.price))
            }
            (Side::Ask, None) if shout.side == Side::Ask && tau >= shout.price as f64 => {
                more(invert(shout.price))
            }
            _ => return,
        };
        self.r = aa_learn(self.r, delta, p.beta1);
    }
}

/// Widrow-Hoff step of aggressiveness toward `delta`, clamped to `[-1, 1]`.
pub fn aa_learn(r: f64, delta: f64, beta: f64) -> f64 {
    (r + beta * (delta - r)).clamp(-1.0, 1.0)
}

/// Weighted mean of `trades` (newest first) with weight `rho^i` on the i-th
/// most recent.
pub fn aa_estimate_equilibrium(trades: &[Price], rho: f64) -> Option<f64> {
    if trades.is_empty() {
        return None;
    }
    let (mut num, mut den, mut w) = (0.0, 0.0, 1.0);
    for &p in trades {
        num += w * p as f64;
        den += w;
        w *= rho;
    }
    Some(num / den)
}

/// `(e^{r theta} - 1) / (e^theta - 1)`, tending to `r` as theta -> 0.
fn shape(r: f64, theta: f64) -> f64 {
    if theta.abs() < 1e-9 {
        r
    } else {
        (r * theta).exp_m1() / theta.exp_m1()
    }
}

/// Target price for aggressiveness `r`, clamped to the price band.
pub fn aa_target_price(
    r: f64,
    theta: f64,
    limit: Price,
    equilibrium: Option<f64>,
    side: Side,
) -> Result<f64, MissingEquilibrium> {
    let eq = equilibrium.ok_or(MissingEquilibrium)?;
    let limit = limit as f64;
    let max = SYS_MAX as f64;
    let raw = match side {
        Side::Bid => {
            let intra = limit > eq;
            if r > 0.0 {
                if intra {
                    eq + (limit - eq) * shape(r, theta)
                } else {
                    limit
                }
            } else {
                let anchor = if intra { eq } else { limit };
                anchor * (1.0 - shape(-r, theta))
            }
        }
        Side::Ask => {
            let intra = limit < eq;
            if r > 0.0 {
                if intra {
                    limit + (eq - limit) * (1.0 - shape(r, theta))
                } else {
                    limit
                }
            } else {
                let anchor = if intra { eq } else { limit };
                anchor + (max - anchor) * shape(-r, theta)
            }
        }
    };
    Ok(raw.clamp(SYS_MIN as f64, max))
}

/// Aggressiveness whose target equals `price`, found by bisection. Prices
/// outside the reachable range map to the nearest end of `[-1, 1]`.
pub fn aa_invert_target(price: f64, theta: f64, limit: Price, eq: f64, side: Side) -> f64 {
    let target = |r: f64| aa_target_price(r, theta, limit, Some(eq), side).expect("eq given");
    // Express both sides as an increasing function of r.
    let sign = match side {
        Side::Bid => 1.0,
        Side::Ask => -1.0,
    };
    let goal = sign * price;
    if sign * target(-1.0) >= goal {
        return -1.0;
    }
    if sign * target(1.0) <= goal {
        return 1.0;
    }
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        let t = sign * target(mid);
        if (t - goal).abs() < 1e-3 {
            return mid;
        }
        if t < goal {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `base + (tau - base) / eta` in whole ticks. Rounding would otherwise pin
/// the quote once it is within a tick or so of the target, so a quote that
/// has not reached `round(tau)` always moves by at least one tick.
fn step_toward(base: Price, tau: f64, eta: f64) -> Price {
    let p = round_half_up(base as f64 + (tau - base as f64) / eta);
    let goal = round_half_up(tau);
    if p == base && goal != base {
        base + (goal - base).signum()
    } else {
        p
    }
}

/// Quote rule: take the best opposite quote if it is within the target,
/// otherwise step `1/eta` of the way from the best same-side quote (or the
/// band edge) toward the target, never beyond the limit. Falls back to a ZIC
/// draw while no equilibrium estimate exists.
pub fn aa_quote<R: Rng + ?Sized>(
    state: &AaState,
    asg: &Assignment,
    snap: &MarketSnapshot,
    rng: &mut R,
) -> Option<Price> {
    let Ok(tau) = aa_target_price(
        state.r,
        state.theta,
        asg.limit,
        state.equilibrium,
        asg.side,
    ) else {
        return Some(zic_quote(asg, rng));
    };
    let eta = state.params.eta;
    let price = match asg.side {
        // An opposite quote already inside the target is taken outright.
        Side::Bid if snap.best_ask.is_some_and(|a| a as f64 <= tau) => {
            snap.best_ask.unwrap_or(SYS_MAX).min(asg.limit)
        }
        Side::Ask if snap.best_bid.is_some_and(|b| b as f64 >= tau) => {
            snap.best_bid.unwrap_or(SYS_MIN).max(asg.limit)
        }
        Side::Bid => step_toward(snap.best_bid.unwrap_or(SYS_MIN), tau, eta).min(asg.limit),
        Side::Ask => step_toward(snap.best_ask.unwrap_or(SYS_MAX), tau, eta).max(asg.limit),
    };
    let price = clamp_price(price);
    let within = match asg.side {
        Side::Bid => price <= asg.limit,
        Side::Ask => price >= asg.limit,
    };
    within.then_some(price)
}
