//! Supply/demand schedules, the moving equilibrium offset and periodic
//! assignment issuance.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::types::{round_half_up, Price, Side, Time, TraderId, SYS_MAX, SYS_MIN};

/// `offset(t) = round(amplitude * sin(2πt / wavelength) + drift * t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffsetParams {
    pub amplitude: f64,
    pub wavelength: f64,
    pub drift: f64,
}

impl Default for OffsetParams {
    fn default() -> Self {
        OffsetParams {
            amplitude: 40.0,
            wavelength: 300.0,
            drift: 0.0,
        }
    }
}

impl OffsetParams {
    pub fn flat() -> Self {
        OffsetParams {
            amplitude: 0.0,
            wavelength: 1.0,
            drift: 0.0,
        }
    }

    /// Largest |offset| reachable over `[0, horizon]`, used for range checks.
    fn bound(&self, horizon: Time) -> f64 {
        self.amplitude.abs() + (self.drift * horizon).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleConfig {
    pub price_floor: Price,
    pub price_ceil: Price,
    pub n_per_side: usize,
    pub offset: OffsetParams,
    pub replenish_interval: Time,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            price_floor: 50,
            price_ceil: 150,
            n_per_side: 20,
            offset: OffsetParams::default(),
            replenish_interval: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MarketError {
    #[error("limit {limit} at t={time} falls outside [{SYS_MIN}, {SYS_MAX}]")]
    RangeViolation { limit: Price, time: Time },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
}

impl ScheduleConfig {
    /// Checks the static invariants, including that the limit range stays in
    /// band for every offset reachable within `horizon` seconds.
    pub fn validate(&self, horizon: Time) -> Result<(), MarketError> {
        let bad = |m: &str| Err(MarketError::InvalidSchedule(m.to_string()));
        if self.price_floor >= self.price_ceil {
            return bad("price_floor must be below price_ceil");
        }
        if self.n_per_side == 0 {
            return bad("n_per_side must be at least 1");
        }
        if !(self.offset.wavelength > 0.0) {
            return bad("offset wavelength must be positive");
        }
        if self.offset.amplitude < 0.0 {
            return bad("offset amplitude must be non-negative");
        }
        if !(self.replenish_interval > 0.0) {
            return bad("replenish_interval must be positive");
        }
        let worst = self.offset.bound(horizon).ceil() as Price;
        if self.price_floor - worst < SYS_MIN || self.price_ceil + worst > SYS_MAX {
            return bad("limit range plus worst-case offset leaves the price band");
        }
        Ok(())
    }

    /// Theoretical equilibrium price at time `t`.
    pub fn equilibrium(&self, t: Time) -> f64 {
        (self.price_floor + self.price_ceil) as f64 / 2.0 + offset_value(t, &self.offset) as f64
    }
}

pub fn offset_value(t: Time, p: &OffsetParams) -> Price {
    let phase = 2.0 * std::f64::consts::PI * t / p.wavelength;
    round_half_up(p.amplitude * phase.sin() + p.drift * t)
}

/// Demand and supply limit lists at time `t`. The two lists hold the same
/// values: `n_per_side` points spread evenly over the shifted range.
pub fn build_limits(cfg: &ScheduleConfig, t: Time) -> Result<(Vec<Price>, Vec<Price>), MarketError> {
    let off = offset_value(t, &cfg.offset);
    let lo = (cfg.price_floor + off) as f64;
    let hi = (cfg.price_ceil + off) as f64;
    let n = cfg.n_per_side;
    let limits: Vec<Price> = if n == 1 {
        vec![round_half_up((lo + hi) / 2.0)]
    } else {
        let step = (hi - lo) / (n - 1) as f64;
        (0..n).map(|i| round_half_up(lo + i as f64 * step)).collect()
    };
    if let Some(&limit) = limits.iter().find(|&&l| !(SYS_MIN..=SYS_MAX).contains(&l)) {
        return Err(MarketError::RangeViolation { limit, time: t });
    }
    Ok((limits.clone(), limits))
}

/// A client order: the trader should buy (`Side::Bid`) or sell (`Side::Ask`)
/// one unit, never paying more / accepting less than `limit`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub trader: TraderId,
    pub side: Side,
    pub limit: Price,
    pub issue_time: Time,
}

impl Assignment {
    /// Profit from trading at `price`.
    pub fn surplus_at(&self, price: Price) -> Price {
        match self.side {
            Side::Bid => self.limit - price,
            Side::Ask => price - self.limit,
        }
    }
}

/// Deals one assignment to every trader. Buyers receive the demand limits and
/// sellers the supply limits, each in a random permutation drawn from `rng`.
/// Traders are dealt in the order given, so callers should pass them in a
/// stable order.
pub fn issue_assignments<R: Rng + ?Sized>(
    t: Time,
    traders: &[(TraderId, Side)],
    cfg: &ScheduleConfig,
    rng: &mut R,
) -> Result<Vec<Assignment>, MarketError> {
    let (mut demand, mut supply) = build_limits(cfg, t)?;
    demand.shuffle(rng);
    supply.shuffle(rng);
    let mut demand = demand.into_iter().cycle();
    let mut supply = supply.into_iter().cycle();
    Ok(traders
        .iter()
        .map(|&(trader, side)| {
            let limit = match side {
                Side::Bid => demand.next(),
                Side::Ask => supply.next(),
            }
            .expect("limit lists are non-empty");
            Assignment {
                trader,
                side,
                limit,
                issue_time: t,
            }
        })
        .collect())
}
