use rand::Rng;

use crate::market::Assignment;
use crate::types::{Price, Side, SYS_MAX, SYS_MIN};

/// Zero-intelligence constrained: a uniform draw between the band edge and
/// the limit.
pub fn zic_quote<R: Rng + ?Sized>(asg: &Assignment, rng: &mut R) -> Price {
    match asg.side {
        Side::Bid => rng.random_range(SYS_MIN..=asg.limit.max(SYS_MIN)),
        Side::Ask => rng.random_range(asg.limit.min(SYS_MAX)..=SYS_MAX),
    }
}
