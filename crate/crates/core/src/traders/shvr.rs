use crate::exchange::MarketSnapshot;
use crate::market::Assignment;
use crate::types::{Price, Side, SYS_MAX, SYS_MIN};

/// Shaver: improve the best same-side quote by one tick without crossing the
/// limit; quote the band edge when that side of the book is empty.
pub fn shvr_quote(asg: &Assignment, snap: &MarketSnapshot) -> Price {
    match asg.side {
        Side::Bid => snap.best_bid.map_or(SYS_MIN, |b| (b + 1).min(asg.limit)),
        Side::Ask => snap.best_ask.map_or(SYS_MAX, |a| (a - 1).max(asg.limit)),
    }
}
