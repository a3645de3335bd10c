mod common;

use cdasim::engine::run_session_sequential;
use cdasim::session::SessionConfig;
use cdasim::Algo;
use common::{homogeneous_roster, mixed_roster};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn all_algos() -> Vec<Algo> {
    Algo::ALL.to_vec()
}

#[test]
fn identical_seed_gives_byte_identical_results() {
    let cfg = SessionConfig::new(mixed_roster(&all_algos(), 10), 4242);
    let a = serde_json::to_vec(&run_session_sequential(&cfg).unwrap()).unwrap();
    let b = serde_json::to_vec(&run_session_sequential(&cfg).unwrap()).unwrap();
    assert_eq!(a, b);
    let other = SessionConfig { seed: 4243, ..cfg };
    let c = serde_json::to_vec(&run_session_sequential(&other).unwrap()).unwrap();
    assert_ne!(a, c);
}

#[test]
fn twelve_thousand_polls_for_forty_traders() {
    let cfg = SessionConfig::new(homogeneous_roster(Algo::Zic, 20), 1);
    let r = run_session_sequential(&cfg).unwrap();
    assert_eq!(r.polls, 12_000);
    assert_eq!(r.realized_duration, 300.0);
}

#[test]
fn polling_is_uniform_across_traders() {
    let mut counts = vec![0u64; 40];
    for seed in 0..10 {
        let cfg = SessionConfig::new(homogeneous_roster(Algo::Shvr, 20), seed);
        let r = run_session_sequential(&cfg).unwrap();
        for (i, t) in r.traders.iter().enumerate() {
            counts[i] += t.iterations;
        }
    }
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let p = 1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat);
    assert!(p > 0.001, "chi-square {stat:.1}, p = {p}");
}

#[test]
fn every_trader_responds_once_per_market_change() {
    for algo in [Algo::Zip, Algo::Aa, Algo::Gdx] {
        let cfg = SessionConfig::new(mixed_roster(&[algo, Algo::Zic], 6), 77);
        let r = run_session_sequential(&cfg).unwrap();
        assert!(r.market_changes > 0);
        for t in &r.traders {
            assert_eq!(t.respond_calls, r.market_changes, "{}", t.id);
            assert_eq!(t.quote_calls, t.iterations);
        }
    }
}

#[test]
fn surplus_is_conserved_and_fills_are_booked_once() {
    for seed in 0..20 {
        let cfg = SessionConfig::new(mixed_roster(&all_algos(), 8), seed);
        let r = run_session_sequential(&cfg).unwrap();
        r.check_surplus_conservation().unwrap();
        assert_eq!(r.lost_fills(), 0);
        let appt = r.appt_by_algo.clone();
        assert_eq!(appt, cdasim::session::SessionResult::compute_appt(&r.traders));
    }
}

#[test]
fn latency_capture_is_opt_in() {
    let mut cfg = SessionConfig::new(homogeneous_roster(Algo::Gdx, 3), 5);
    assert!(run_session_sequential(&cfg).unwrap().latency.is_none());
    cfg.measure_latency = true;
    let r = run_session_sequential(&cfg).unwrap();
    let lat = r.latency.unwrap();
    assert!(lat[&Algo::Gdx].quote.calls > 0);
}

#[test]
fn flat_market_trades_near_equilibrium() {
    // Single sessions wander by +-10 ticks, so pool the late trades of several.
    let mut prices = Vec::new();
    for seed in 1..=8 {
        let mut cfg = SessionConfig::new(homogeneous_roster(Algo::Zip, 20), seed);
        cfg.schedule.offset = cdasim::market::OffsetParams::flat();
        let r = run_session_sequential(&cfg).unwrap();
        prices.extend(r.tape.iter().filter(|t| t.txn.time > 200.0).map(|t| t.txn.price as f64));
    }
    assert!(prices.len() > 100);
    let mean = prices.iter().sum::<f64>() / prices.len() as f64;
    assert!((mean - 100.0).abs() < 5.0, "late mean price {mean}");
}
