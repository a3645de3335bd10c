//! Primitive domain types shared by every module.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Prices are integer ticks.
pub type Price = i64;

/// Lowest price the exchange accepts.
pub const SYS_MIN: Price = 1;
/// Highest price the exchange accepts.
pub const SYS_MAX: Price = 500;

/// Simulation timestamp in seconds (virtual in the sequential engine,
/// wall-clock since session start in the threaded engine).
pub type Time = f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TraderId(pub u32);

impl fmt::Display for TraderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{:03}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OrderId(pub u64);

/// Which side of the book an order (or an assignment) lives on.
/// A buyer's assignment is a `Bid`, a seller's an `Ask`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Bid,
    Ask,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Bid => Side::Ask,
            Side::Ask => Side::Bid,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Bid => "Bid",
            Side::Ask => "Ask",
        })
    }
}

/// Trading algorithms. The declaration order is the canonical order used when
/// building rosters, so that rosters do not depend on which algorithm is
/// labelled "A" in an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Algo {
    #[serde(rename = "ZIC")]
    Zic,
    #[serde(rename = "SHVR")]
    Shvr,
    #[serde(rename = "ZIP")]
    Zip,
    #[serde(rename = "GDX")]
    Gdx,
    #[serde(rename = "AA")]
    Aa,
}

impl Algo {
    pub const ALL: [Algo; 5] = [Algo::Zic, Algo::Shvr, Algo::Zip, Algo::Gdx, Algo::Aa];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Zic => "ZIC",
            Algo::Shvr => "SHVR",
            Algo::Zip => "ZIP",
            Algo::Gdx => "GDX",
            Algo::Aa => "AA",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown algorithm `{0}` (expected one of ZIC, SHVR, ZIP, GDX, AA)")]
pub struct UnknownAlgo(pub String);

impl FromStr for Algo {
    type Err = UnknownAlgo;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownAlgo(s.to_string()))
    }
}

/// Round half-up to an integer tick.
pub fn round_half_up(x: f64) -> Price {
    (x + 0.5).floor() as Price
}

pub fn clamp_price(p: Price) -> Price {
    p.clamp(SYS_MIN, SYS_MAX)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_up_rounding() {
        assert_eq!(round_half_up(2.5), 3);
        assert_eq!(round_half_up(-2.5), -2);
        assert_eq!(round_half_up(2.4999), 2);
        assert_eq!(round_half_up(-0.2), 0);
    }

    #[test]
    fn algo_names_round_trip() {
        for a in Algo::ALL {
            assert_eq!(a.name().parse::<Algo>().unwrap(), a);
        }
        assert_eq!("gdx".parse::<Algo>().unwrap(), Algo::Gdx);
        assert!("MGD".parse::<Algo>().is_err());
    }
}
