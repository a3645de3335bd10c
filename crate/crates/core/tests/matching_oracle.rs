mod common;

use cdasim::exchange::{LimitOrderBook, Order, SubmitOutcome};
use cdasim::{OrderId, Side, TraderId};
use common::{book_trades, oracle_trades, random_stream};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn book_agrees_with_brute_force_on_random_streams() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xb00c);
    for case in 0..2_000 {
        let traders = 2 + case % 8;
        let stream = random_stream(&mut rng, traders, 20, 1, 500);
        assert_eq!(book_trades(&stream, traders), oracle_trades(&stream), "stream {stream:?}");
    }
}

#[test]
fn narrow_price_range_exercises_time_priority() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..2_000 {
        let stream = random_stream(&mut rng, 6, 20, 99, 101);
        assert_eq!(book_trades(&stream, 6), oracle_trades(&stream));
    }
}

proptest! {
    #[test]
    fn out_of_band_orders_never_change_anything(
        stream in prop::collection::vec((0u32..5, any::<bool>(), -5i64..510), 0..30)
    ) {
        let stream: Vec<_> = stream
            .into_iter()
            .map(|(t, bid, p)| (t, if bid { Side::Bid } else { Side::Ask }, p))
            .collect();
        prop_assert_eq!(book_trades(&stream, 5), oracle_trades(&stream));
    }

    #[test]
    fn book_is_never_left_crossed(stream in prop::collection::vec((0u32..6, any::<bool>(), 1i64..=500), 0..40)) {
        let mut book = LimitOrderBook::with_traders((0..6).map(TraderId));
        for (i, (t, bid, p)) in stream.into_iter().enumerate() {
            let side = if bid { Side::Bid } else { Side::Ask };
            let out = book.submit_order(Order::new(OrderId(i as u64), TraderId(t), side, p, i as f64));
            prop_assert!(out.is_ok());
            if let (Some(b), Some(a)) = (book.best_bid(), book.best_ask()) {
                prop_assert!(b < a);
            }
            prop_assert!(book.bid_depth() + book.ask_depth() <= 6);
            if let Ok(SubmitOutcome::Traded(txn)) = out {
                prop_assert_ne!(txn.buyer, txn.seller);
            }
        }
    }
}
