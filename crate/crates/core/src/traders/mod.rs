//! Trading algorithms behind a uniform quote / respond / fill interface.
//!
//! Every algorithm is a state machine owned by a [`Trader`]. Engines drive it
//! through three calls:
//!
//! - [`Trader::quote`] asks for a price for the active assignment (the
//!   `getorder` step); `None` means abstain.
//! - [`Trader::respond`] feeds the shouts seen since the previous call plus the
//!   latest public snapshot, letting adaptive algorithms update their state.
//! - [`Trader::on_fill`] books a trade against the active assignment.
//!
//! All internal arithmetic is real-valued; prices are rounded half-up only
//! when an order is emitted.

mod aa;
mod gdx;
mod shvr;
mod zic;
mod zip;

pub use aa::{
    aa_estimate_equilibrium, aa_invert_target, aa_learn, aa_quote, aa_target_price, AaParams,
    AaState, MissingEquilibrium,
};
pub use gdx::{
    belief_curve, gd_belief, gdx_choose_price, gdx_value_iteration, ColdStart, GdxParams,
    GdxState, ShoutRecord,
};
pub use shvr::shvr_quote;
pub use zic::zic_quote;
pub use zip::{zip_price_step, zip_quote, ZipParams, ZipState};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exchange::{MarketSnapshot, Transaction};
use crate::market::Assignment;
use crate::types::{Algo, Price, Side, Time, TraderId};

/// One public market event: an order arriving at the exchange and, if it
/// crossed, the price it traded at. Carries no trader identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shout {
    pub side: Side,
    pub price: Price,
    /// Transaction price when the shout traded (the resting order's price).
    pub trade: Option<Price>,
    pub time: Time,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TraderParams {
    pub zip: ZipParams,
    pub gdx: GdxParams,
    pub aa: AaParams,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TraderError {
    #[error("trader {0} received a fill without an active assignment")]
    FillWithoutAssignment(TraderId),
    #[error("trader {trader} received a fill for a trade it is not party to")]
    ForeignFill { trader: TraderId },
    #[error("trader {trader} quoted {price} against limit {limit}")]
    BudgetViolation {
        trader: TraderId,
        price: Price,
        limit: Price,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraderCommonState {
    pub id: TraderId,
    pub algo: Algo,
    pub side: Side,
    /// Sum of per-fill profits.
    pub balance: Price,
    pub active_assignment: Option<Assignment>,
    pub current_quote: Option<Price>,
    pub blotter: Vec<Transaction>,
}

impl TraderCommonState {
    /// Books `txn` against the active assignment and returns the profit.
    pub fn on_fill(&mut self, txn: &Transaction) -> Result<Price, TraderError> {
        if !txn.involves(self.id) {
            return Err(TraderError::ForeignFill { trader: self.id });
        }
        let asg = self
            .active_assignment
            .take()
            .ok_or(TraderError::FillWithoutAssignment(self.id))?;
        let profit = (asg.limit - txn.price).abs();
        self.balance += profit;
        self.current_quote = None;
        self.blotter.push(txn.clone());
        Ok(profit)
    }
}

#[derive(Debug, Clone)]
enum Strategy {
    Zic,
    Shvr,
    Zip(ZipState),
    Gdx(GdxState),
    Aa(AaState),
}

/// A trader: common bookkeeping, algorithm state and a private random source.
#[derive(Debug, Clone)]
pub struct Trader {
    pub common: TraderCommonState,
    strategy: Strategy,
    rng: ChaCha8Rng,
}

impl Trader {
    /// `seed` should be derived from the session seed and the trader id so
    /// the trader behaves the same regardless of its position in the roster.
    pub fn new(id: TraderId, algo: Algo, side: Side, params: &TraderParams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let strategy = match algo {
            Algo::Zic => Strategy::Zic,
            Algo::Shvr => Strategy::Shvr,
            Algo::Zip => Strategy::Zip(ZipState::new(&params.zip, side, &mut rng)),
            Algo::Gdx => Strategy::Gdx(GdxState::new(&params.gdx)),
            Algo::Aa => Strategy::Aa(AaState::new(&params.aa, side, &mut rng)),
        };
        Trader {
            common: TraderCommonState {
                id,
                algo,
                side,
                balance: 0,
                active_assignment: None,
                current_quote: None,
                blotter: Vec::new(),
            },
            strategy,
            rng,
        }
    }

    pub fn id(&self) -> TraderId {
        self.common.id
    }

    pub fn algo(&self) -> Algo {
        self.common.algo
    }

    pub fn side(&self) -> Side {
        self.common.side
    }

    pub fn balance(&self) -> Price {
        self.common.balance
    }

    pub fn is_active(&self) -> bool {
        self.common.active_assignment.is_some()
    }

    /// Installs a new assignment, discarding any unfilled one.
    pub fn assign(&mut self, asg: Assignment) {
        debug_assert_eq!(asg.trader, self.common.id);
        match &mut self.strategy {
            Strategy::Zip(s) => s.set_limit(asg.limit),
            Strategy::Gdx(s) => s.on_assignment(),
            Strategy::Aa(s) => s.set_limit(asg.limit),
            Strategy::Zic | Strategy::Shvr => {}
        }
        self.common.active_assignment = Some(asg);
        self.common.current_quote = None;
    }

    /// The `getorder` step. Returns the quote price, or `None` to abstain.
    pub fn quote(&mut self, snap: &MarketSnapshot) -> Result<Option<Price>, TraderError> {
        let Some(asg) = self.common.active_assignment else {
            return Ok(None);
        };
        let price = match &mut self.strategy {
            Strategy::Zic => Some(zic_quote(&asg, &mut self.rng)),
            Strategy::Shvr => Some(shvr_quote(&asg, snap)),
            Strategy::Zip(s) => Some(zip_quote(s, &asg)),
            Strategy::Gdx(s) => {
                if s.is_cold() {
                    Some(zic_quote(&asg, &mut self.rng))
                } else {
                    match gdx_choose_price(asg.limit, asg.side, s) {
                        Ok(choice) => choice.map(|(p, _)| p),
                        Err(ColdStart) => Some(zic_quote(&asg, &mut self.rng)),
                    }
                }
            }
            Strategy::Aa(s) => aa_quote(s, &asg, snap, &mut self.rng),
        };
        if let Some(p) = price {
            let ok = match asg.side {
                Side::Bid => p <= asg.limit,
                Side::Ask => p >= asg.limit,
            };
            if !ok {
                return Err(TraderError::BudgetViolation {
                    trader: self.common.id,
                    price: p,
                    limit: asg.limit,
                });
            }
        }
        self.common.current_quote = price;
        Ok(price)
    }

    /// The `respond` step: digest the shouts seen since the last call.
    pub fn respond(&mut self, _snap: &MarketSnapshot, shouts: &[Shout]) {
        let active = self.common.active_assignment.is_some();
        match &mut self.strategy {
            Strategy::Zic | Strategy::Shvr => {}
            Strategy::Zip(s) => {
                for shout in shouts {
                    s.respond(shout, active, &mut self.rng);
                }
            }
            Strategy::Gdx(s) => {
                for shout in shouts {
                    s.observe(shout);
                }
            }
            Strategy::Aa(s) => {
                for shout in shouts {
                    s.update(shout);
                }
            }
        }
    }

    pub fn on_fill(&mut self, txn: &Transaction) -> Result<Price, TraderError> {
        self.common.on_fill(txn)
    }

    pub fn zip_state(&self) -> Option<&ZipState> {
        match &self.strategy {
            Strategy::Zip(s) => Some(s),
            _ => None,
        }
    }

    pub fn gdx_state(&self) -> Option<&GdxState> {
        match &self.strategy {
            Strategy::Gdx(s) => Some(s),
            _ => None,
        }
    }

    pub fn aa_state(&self) -> Option<&AaState> {
        match &self.strategy {
            Strategy::Aa(s) => Some(s),
            _ => None,
        }
    }
}
