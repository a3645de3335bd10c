mod common;

use std::collections::BTreeMap;

use cdasim::engine::{run_session_threaded, Parallelism, ThreadedConfig};
use cdasim::session::SessionConfig;
use cdasim::{Algo, Side, TraderId};
use common::{homogeneous_roster, mixed_roster};

fn config(roster: Vec<cdasim::session::RosterEntry>, seed: u64, wall: f64) -> ThreadedConfig {
    let mut cfg = ThreadedConfig::new(SessionConfig::new(roster, seed));
    cfg.wall_duration = wall;
    cfg
}

#[test]
fn sessions_are_sound_in_both_modes() {
    for (i, par) in [Parallelism::Serialized, Parallelism::Full].into_iter().enumerate() {
        let mut cfg = config(mixed_roster(&Algo::ALL, 5), i as u64, 1.0);
        cfg.parallelism = par;
        let r = run_session_threaded(&cfg).unwrap();
        assert!(r.realized_duration >= 1.0);
        assert!(r.realized_duration < 1.0 + cfg.drain_timeout);
        r.check_surplus_conservation().unwrap();
        assert_eq!(r.lost_fills(), 0);
        assert_eq!(r.fifo_violations, 0);
        assert!(!r.tape.is_empty(), "{par:?} produced no trades");
        let prov = r.provenance.unwrap();
        assert_eq!(prov.seed, i as u64);
    }
}

#[test]
fn injected_delay_shows_up_in_latency() {
    let mut cfg = config(mixed_roster(&[Algo::Gdx, Algo::Zic], 4), 8, 1.0);
    cfg.parallelism = Parallelism::Full;
    cfg.delay_profile = BTreeMap::from([(Algo::Gdx, 10.0), (Algo::Zic, 0.0)]);
    let r = run_session_threaded(&cfg).unwrap();
    let lat = r.latency.unwrap();
    assert!(lat[&Algo::Gdx].quote.mean_us > lat[&Algo::Zic].quote.mean_us);
    assert!(lat[&Algo::Gdx].quote.mean_us >= 10_000.0);
}

#[test]
fn faster_traders_run_more_iterations() {
    for par in [Parallelism::Serialized, Parallelism::Full] {
        let roster = homogeneous_roster(Algo::Zip, 4);
        let mut cfg = config(roster.clone(), 21, 2.0);
        cfg.parallelism = par;
        // Half of each side is 100 times slower than the other half.
        for r in &roster {
            let fast = r.id.0 % 4 < 2;
            cfg.trader_delay_ms.insert(r.id, if fast { 0.1 } else { 10.0 });
        }
        let r = run_session_threaded(&cfg).unwrap();
        let mean = |fast: bool| {
            let it: Vec<u64> = r
                .traders
                .iter()
                .filter(|t| (t.id.0 % 4 < 2) == fast)
                .map(|t| t.iterations)
                .collect();
            it.iter().sum::<u64>() as f64 / it.len() as f64
        };
        assert!(mean(true) > mean(false), "{par:?}: fast {} slow {}", mean(true), mean(false));
    }
}

#[test]
fn tiny_queue_never_loses_orders() {
    let mut cfg = config(mixed_roster(&[Algo::Zic, Algo::Shvr], 6), 13, 1.0);
    cfg.queue_capacity = 1;
    cfg.parallelism = Parallelism::Full;
    let r = run_session_threaded(&cfg).unwrap();
    assert_eq!(r.fifo_violations, 0);
    assert_eq!(r.lost_fills(), 0);
    r.check_surplus_conservation().unwrap();
}

#[test]
fn trades_only_involve_opposite_sides() {
    let cfg = config(mixed_roster(&[Algo::Aa, Algo::Zip], 3), 2, 1.0);
    let r = run_session_threaded(&cfg).unwrap();
    let side = |id: TraderId| r.traders.iter().find(|t| t.id == id).unwrap().side;
    for t in &r.tape {
        assert_eq!(side(t.txn.buyer), Side::Bid);
        assert_eq!(side(t.txn.seller), Side::Ask);
    }
}
