//! One thread per trader, one exchange thread, and a coordinator on the
//! calling thread. Traders talk to the exchange only through a bounded FIFO
//! order queue; the exchange talks back through one unbounded feed per trader.
//!
//! Assignments are routed through the exchange so that each feed has exactly
//! one producer and a trader always sees its new assignment before any fill
//! or market event that depends on it.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender, SyncSender};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use parking_lot::{FairMutex, FairMutexGuard};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exchange::{LimitOrderBook, MarketSnapshot, Order, SubmitOutcome, Transaction};
use crate::market::{issue_assignments, Assignment};
use crate::seed;
use crate::session::{
    EngineError, Provenance, SessionConfig, SessionResult, TradeRecord, TraderOutcome,
};
use crate::traders::{Shout, Trader};
use crate::types::{Algo, OrderId, Price, Side, Time, TraderId};

use super::{build_traders, roster_pairs, LatencySamples};

pub const DEFAULT_QUEUE_CAPACITY: usize = 64;

/// How trader threads share the processor.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parallelism {
    /// At most one trader computes at any instant. A trader holding the
    /// compute token hands it over every `quantum`, so long deliberations are
    /// interleaved rather than run to completion.
    #[default]
    Serialized,
    /// Traders compute truly in parallel.
    Full,
}

/// How an injected delay is spent under [`Parallelism::Full`]. Serialized
/// runs always spin, since the delay stands for computation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DelayKind {
    #[default]
    Sleep,
    Spin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreadedConfig {
    /// Roster, schedule, trader parameters and seed. `duration` is ignored.
    pub session: SessionConfig,
    /// Wall-clock seconds.
    pub wall_duration: f64,
    /// Virtual seconds per wall second.
    pub time_scale: f64,
    /// Extra deliberation per quote or respond call, in milliseconds.
    pub delay_profile: BTreeMap<Algo, f64>,
    /// Per-trader delays in milliseconds, overriding `delay_profile`.
    #[serde(default)]
    pub trader_delay_ms: BTreeMap<TraderId, f64>,
    pub parallelism: Parallelism,
    pub delay_kind: DelayKind,
    pub queue_capacity: usize,
    /// Time slice for the compute token, in milliseconds.
    pub quantum_ms: f64,
    /// How long stopped threads may take to finish, in seconds.
    pub drain_timeout: f64,
    /// Longest a trader with nothing to do waits for news, in milliseconds.
    pub idle_wait_ms: f64,
}

impl ThreadedConfig {
    pub fn new(session: SessionConfig) -> Self {
        ThreadedConfig {
            session,
            wall_duration: 10.0,
            time_scale: 30.0,
            delay_profile: BTreeMap::new(),
            trader_delay_ms: BTreeMap::new(),
            parallelism: Parallelism::default(),
            delay_kind: DelayKind::default(),
            queue_capacity: DEFAULT_QUEUE_CAPACITY,
            quantum_ms: 5.0,
            drain_timeout: 10.0,
            idle_wait_ms: 1.0,
        }
    }

    pub fn delay_for(&self, trader: TraderId, algo: Algo) -> Duration {
        let ms = self
            .trader_delay_ms
            .get(&trader)
            .or_else(|| self.delay_profile.get(&algo))
            .copied()
            .unwrap_or(0.0);
        Duration::from_secs_f64(ms / 1000.0)
    }

    fn virtual_horizon(&self) -> Time {
        self.wall_duration * self.time_scale
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: &str| Err(EngineError::ConfigInvalid(m.to_string()));
        if !(self.wall_duration > 0.0) || !self.wall_duration.is_finite() {
            return bad("wall_duration must be positive");
        }
        if !(self.time_scale > 0.0) || !self.time_scale.is_finite() {
            return bad("time_scale must be positive");
        }
        if self.queue_capacity == 0 {
            return bad("queue_capacity must be at least 1");
        }
        let mut delays = self.delay_profile.values().chain(self.trader_delay_ms.values());
        if delays.any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return bad("delays must be non-negative");
        }
        if !(self.quantum_ms > 0.0) || !(self.drain_timeout > 0.0) || !(self.idle_wait_ms > 0.0) {
            return bad("quantum_ms, drain_timeout and idle_wait_ms must be positive");
        }
        let mut session = self.session.clone();
        session.duration = self.virtual_horizon();
        session.validate()
    }
}

#[derive(Debug, Clone)]
struct MarketEvent {
    shout: Shout,
    snapshot: MarketSnapshot,
}

#[derive(Debug, Clone)]
enum FeedMsg {
    Assignment { asg: Assignment, round: u64 },
    Fill(Transaction),
    Market(Arc<MarketEvent>),
    Rejected { seq: u64 },
}

#[derive(Debug, Clone)]
struct OrderMsg {
    trader: TraderId,
    side: Side,
    price: Price,
    round: u64,
    /// Per-producer sequence number, strictly increasing.
    seq: u64,
}

#[derive(Debug, Clone)]
enum ExchangeMsg {
    Order(OrderMsg),
    Replenish { round: u64, assignments: Vec<Assignment> },
    Shutdown,
}

/// The exchange's state. Kept free of threading so it can be driven directly.
struct ExchangeActor {
    book: LimitOrderBook,
    feeds: HashMap<TraderId, Sender<FeedMsg>>,
    round: Option<u64>,
    /// Limits of assignments that are still unfilled this round.
    live: HashMap<TraderId, Price>,
    last_seq: HashMap<TraderId, u64>,
    tape: Vec<TradeRecord>,
    next_order: u64,
    rejected: u64,
    stale: u64,
    market_changes: u64,
    fifo_violations: u64,
}

impl ExchangeActor {
    fn new(feeds: HashMap<TraderId, Sender<FeedMsg>>) -> Self {
        ExchangeActor {
            book: LimitOrderBook::with_traders(feeds.keys().copied()),
            feeds,
            round: None,
            live: HashMap::new(),
            last_seq: HashMap::new(),
            tape: Vec::new(),
            next_order: 0,
            rejected: 0,
            stale: 0,
            market_changes: 0,
            fifo_violations: 0,
        }
    }

    fn send(&self, to: TraderId, msg: FeedMsg) {
        // A trader that has already exited leaves its receiver with the
        // coordinator, so sends only fail if the whole session is tearing down.
        if let Some(f) = self.feeds.get(&to) {
            let _ = f.send(msg);
        }
    }

    fn replenish(&mut self, round: u64, assignments: Vec<Assignment>) {
        self.book.clear_orders();
        self.round = Some(round);
        self.live = assignments.iter().map(|a| (a.trader, a.limit)).collect();
        for asg in assignments {
            self.send(asg.trader, FeedMsg::Assignment { asg, round });
        }
    }

    fn order(&mut self, m: OrderMsg, now: Time) {
        let last = self.last_seq.insert(m.trader, m.seq);
        if last.is_some_and(|l| m.seq <= l) {
            self.fifo_violations += 1;
        }
        // Orders issued against an earlier round, or by a trader whose
        // assignment already filled, would trade without a live assignment.
        if self.round != Some(m.round) || !self.live.contains_key(&m.trader) {
            self.stale += 1;
            return;
        }
        let order = Order::new(OrderId(self.next_order), m.trader, m.side, m.price, now);
        self.next_order += 1;
        let outcome = match self.book.submit_order(order) {
            Ok(o) => o,
            Err(_) => {
                self.rejected += 1;
                self.send(m.trader, FeedMsg::Rejected { seq: m.seq });
                return;
            }
        };
        let trade = match outcome {
            SubmitOutcome::Traded(txn) => {
                let buyer_limit = self.live.remove(&txn.buyer);
                let seller_limit = self.live.remove(&txn.seller);
                let (Some(buyer_limit), Some(seller_limit)) = (buyer_limit, seller_limit) else {
                    unreachable!("resting orders always belong to live assignments");
                };
                self.send(txn.buyer, FeedMsg::Fill(txn.clone()));
                self.send(txn.seller, FeedMsg::Fill(txn.clone()));
                let price = txn.price;
                self.tape.push(TradeRecord {
                    txn,
                    buyer_limit,
                    seller_limit,
                });
                Some(price)
            }
            SubmitOutcome::Rested | SubmitOutcome::Replaced => None,
        };
        self.market_changes += 1;
        let event = Arc::new(MarketEvent {
            shout: Shout {
                side: m.side,
                price: m.price,
                trade,
                time: now,
            },
            snapshot: self.book.snapshot(f64::INFINITY),
        });
        for f in self.feeds.values() {
            let _ = f.send(FeedMsg::Market(Arc::clone(&event)));
        }
    }
}

struct ExchangeRun {
    actor: ExchangeActor,
}

struct TraderRun {
    trader: Trader,
    feed: Receiver<FeedMsg>,
    quote_calls: u64,
    respond_calls: u64,
    iterations: u64,
    latency: LatencySamples,
}

enum Done {
    Trader(usize, Box<Result<TraderRun, EngineError>>),
    Exchange(Box<ExchangeRun>),
}

struct Pacing {
    delay: Duration,
    kind: DelayKind,
    quantum: Duration,
    idle_wait: Duration,
}

fn spin_for(d: Duration) {
    let end = Instant::now() + d;
    while Instant::now() < end {
        std::hint::spin_loop();
    }
}

/// Spends the injected deliberation delay. While holding the compute token the
/// delay is burnt in quantum-sized slices, handing the token to any waiter
/// between slices.
fn deliberate(p: &Pacing, guard: &mut Option<FairMutexGuard<'_, ()>>) {
    if p.delay.is_zero() {
        return;
    }
    match guard {
        Some(g) => {
            let end = Instant::now() + p.delay;
            loop {
                let now = Instant::now();
                if now >= end {
                    break;
                }
                spin_for((end - now).min(p.quantum));
                if Instant::now() < end {
                    FairMutexGuard::bump(g);
                }
            }
        }
        None => match p.kind {
            DelayKind::Sleep => thread::sleep(p.delay),
            DelayKind::Spin => spin_for(p.delay),
        },
    }
}

struct TraderLoop {
    trader: Trader,
    feed: Receiver<FeedMsg>,
    orders: SyncSender<ExchangeMsg>,
    stop: Arc<AtomicBool>,
    token: Option<Arc<FairMutex<()>>>,
    pacing: Pacing,
    // loop state
    snapshot: Option<Arc<MarketEvent>>,
    pending: Vec<Shout>,
    round: Option<u64>,
    /// Price of this trader's order believed to be resting on the book.
    resting: Option<Price>,
    seq: u64,
    quote_calls: u64,
    respond_calls: u64,
    iterations: u64,
    latency: LatencySamples,
}

impl TraderLoop {
    fn handle(&mut self, msg: FeedMsg) -> Result<(), EngineError> {
        match msg {
            FeedMsg::Assignment { asg, round } => {
                self.trader.assign(asg);
                self.round = Some(round);
                self.resting = None;
            }
            FeedMsg::Fill(txn) => {
                self.trader.on_fill(&txn)?;
                self.resting = None;
            }
            FeedMsg::Market(ev) => {
                self.pending.push(ev.shout);
                self.snapshot = Some(ev);
            }
            FeedMsg::Rejected { seq } => {
                if seq == self.seq {
                    self.resting = None;
                }
            }
        }
        Ok(())
    }

    fn stopped(&self) -> bool {
        self.stop.load(Ordering::Acquire)
    }

    /// Receive fills and news, respond, quote, then enqueue the order.
    fn run(mut self) -> Result<TraderRun, EngineError> {
        let algo = self.trader.algo();
        let empty = MarketSnapshot::default();
        while !self.stopped() {
            let mut heard = false;
            while let Ok(msg) = self.feed.try_recv() {
                heard = true;
                self.handle(msg)?;
            }
            if self.stopped() {
                break;
            }

            let token = self.token.clone();
            let mut guard = token.as_ref().map(|t| t.lock());
            let snap = self.snapshot.as_ref().map_or(&empty, |e| &e.snapshot);

            let started = Instant::now();
            deliberate(&self.pacing, &mut guard);
            self.trader.respond(snap, &self.pending);
            self.latency.respond(algo, started.elapsed().as_secs_f64() * 1e6);
            self.respond_calls += 1;
            self.pending.clear();
            if self.stopped() {
                break;
            }

            let started = Instant::now();
            deliberate(&self.pacing, &mut guard);
            let quoted = self.trader.quote(snap)?;
            self.latency.quote(algo, started.elapsed().as_secs_f64() * 1e6);
            self.quote_calls += 1;
            drop(guard);
            self.iterations += 1;
            if self.stopped() {
                break;
            }

            let mut sent = false;
            if let (Some(price), Some(round)) = (quoted, self.round) {
                // Re-sending an identical order would only cost time priority.
                if self.resting != Some(price) {
                    self.seq += 1;
                    let msg = OrderMsg {
                        trader: self.trader.id(),
                        side: self.trader.side(),
                        price,
                        round,
                        seq: self.seq,
                    };
                    self.orders.send(ExchangeMsg::Order(msg)).map_err(|_| {
                        EngineError::QueueOverflowPolicyViolated(
                            "exchange stopped accepting orders while traders were running".into(),
                        )
                    })?;
                    self.resting = Some(price);
                    sent = true;
                }
            }
            if !sent && !heard {
                match self.feed.recv_timeout(self.pacing.idle_wait) {
                    Ok(msg) => self.handle(msg)?,
                    Err(RecvTimeoutError::Timeout) => {}
                    Err(RecvTimeoutError::Disconnected) => break,
                }
            }
        }
        Ok(TraderRun {
            trader: self.trader,
            feed: self.feed,
            quote_calls: self.quote_calls,
            respond_calls: self.respond_calls,
            iterations: self.iterations,
            latency: self.latency,
        })
    }
}

fn host_descriptor() -> String {
    let name = std::env::var("HOSTNAME").unwrap_or_else(|_| "unknown-host".into());
    let cpus = thread::available_parallelism().map_or(0, |n| n.get());
    format!(
        "{name} {}-{} cpus={cpus}",
        std::env::consts::OS,
        std::env::consts::ARCH
    )
}

fn wait_until(deadline: Instant, stop: &AtomicBool) {
    loop {
        let now = Instant::now();
        if now >= deadline || stop.load(Ordering::Acquire) {
            return;
        }
        thread::sleep((deadline - now).min(Duration::from_millis(20)));
    }
}

/// Runs one session on the wall clock. Not replay-deterministic: the result
/// records its seed, delay profile, parallelism mode and host instead.
pub fn run_session_threaded(cfg: &ThreadedConfig) -> Result<SessionResult, EngineError> {
    cfg.validate()?;
    let session = &cfg.session;
    let n = session.roster.len();
    let traders = build_traders(session);
    let pairs = roster_pairs(session);
    let mut sched = ChaCha8Rng::seed_from_u64(seed::derive(session.seed, &[seed::STREAM_SCHEDULE]));

    let stop = Arc::new(AtomicBool::new(false));
    let (order_tx, order_rx) = mpsc::sync_channel::<ExchangeMsg>(cfg.queue_capacity);
    let (done_tx, done_rx) = mpsc::channel::<Done>();
    let token = (cfg.parallelism == Parallelism::Serialized).then(|| Arc::new(FairMutex::new(())));

    let mut feed_tx = HashMap::new();
    let mut feed_rx = Vec::with_capacity(n);
    for t in &traders {
        let (tx, rx) = mpsc::channel();
        feed_tx.insert(t.id(), tx);
        feed_rx.push(rx);
    }

    let start = Instant::now();
    let mut handles: Vec<JoinHandle<()>> = Vec::with_capacity(n + 1);

    let time_scale = cfg.time_scale;
    let exchange_done = done_tx.clone();
    handles.push(
        thread::Builder::new()
            .name("exchange".into())
            .spawn(move || {
                let mut actor = ExchangeActor::new(feed_tx);
                while let Ok(msg) = order_rx.recv() {
                    match msg {
                        ExchangeMsg::Order(m) => {
                            let now = start.elapsed().as_secs_f64() * time_scale;
                            actor.order(m, now);
                        }
                        ExchangeMsg::Replenish { round, assignments } => {
                            actor.replenish(round, assignments)
                        }
                        ExchangeMsg::Shutdown => break,
                    }
                }
                let _ = exchange_done.send(Done::Exchange(Box::new(ExchangeRun { actor })));
            })
            .expect("spawn exchange thread"),
    );

    for (idx, (trader, feed)) in traders.into_iter().zip(feed_rx).enumerate() {
        let pacing = Pacing {
            delay: cfg.delay_for(trader.id(), trader.algo()),
            kind: cfg.delay_kind,
            quantum: Duration::from_secs_f64(cfg.quantum_ms / 1000.0),
            idle_wait: Duration::from_secs_f64(cfg.idle_wait_ms / 1000.0),
        };
        let lp = TraderLoop {
            trader,
            feed,
            orders: order_tx.clone(),
            stop: Arc::clone(&stop),
            token: token.clone(),
            pacing,
            snapshot: None,
            pending: Vec::new(),
            round: None,
            resting: None,
            seq: 0,
            quote_calls: 0,
            respond_calls: 0,
            iterations: 0,
            latency: LatencySamples::default(),
        };
        let done = done_tx.clone();
        let stop = Arc::clone(&stop);
        handles.push(
            thread::Builder::new()
                .name(format!("trader-{idx}"))
                .spawn(move || {
                    let out = lp.run();
                    if out.is_err() {
                        stop.store(true, Ordering::Release);
                    }
                    let _ = done.send(Done::Trader(idx, Box::new(out)));
                })
                .expect("spawn trader thread"),
        );
    }
    drop(done_tx);

    // Coordinator: issue assignments on the wall-clock schedule.
    let end = start + Duration::from_secs_f64(cfg.wall_duration);
    let wall_interval = session.schedule.replenish_interval / cfg.time_scale;
    let mut round = 0u64;
    let mut failure: Option<EngineError> = None;
    loop {
        let at = round as f64 * wall_interval;
        if at >= cfg.wall_duration || stop.load(Ordering::Acquire) {
            break;
        }
        wait_until(start + Duration::from_secs_f64(at), &stop);
        if stop.load(Ordering::Acquire) {
            break;
        }
        let virtual_t = round as f64 * session.schedule.replenish_interval;
        match issue_assignments(virtual_t, &pairs, &session.schedule, &mut sched) {
            Ok(assignments) => {
                if order_tx.send(ExchangeMsg::Replenish { round, assignments }).is_err() {
                    failure = Some(EngineError::QueueOverflowPolicyViolated(
                        "exchange queue closed before the session ended".into(),
                    ));
                    break;
                }
            }
            Err(e) => {
                failure = Some(EngineError::ConfigInvalid(e.to_string()));
                break;
            }
        }
        round += 1;
    }
    wait_until(end, &stop);
    stop.store(true, Ordering::Release);

    // Drain: traders stop first, then the exchange empties the queue.
    let drain = Duration::from_secs_f64(cfg.drain_timeout);
    let deadline = Instant::now() + drain;
    let mut runs: Vec<Option<TraderRun>> = (0..n).map(|_| None).collect();
    let mut exchange: Option<ExchangeRun> = None;
    let mut pending_traders = n;
    let mut shutdown_sent = false;
    while pending_traders > 0 || exchange.is_none() {
        if pending_traders == 0 && !shutdown_sent {
            // Everything a trader enqueued is ahead of this in the FIFO.
            let _ = order_tx.send(ExchangeMsg::Shutdown);
            shutdown_sent = true;
        }
        let left = deadline.saturating_duration_since(Instant::now());
        match done_rx.recv_timeout(left) {
            Ok(Done::Trader(idx, out)) => {
                pending_traders -= 1;
                match *out {
                    Ok(run) => runs[idx] = Some(run),
                    Err(e) => {
                        failure.get_or_insert(e);
                    }
                }
            }
            Ok(Done::Exchange(run)) => exchange = Some(*run),
            Err(_) => {
                return Err(EngineError::JoinTimeout(format!(
                    "{pending_traders} trader(s) and {} exchange still running after {:.1}s",
                    if exchange.is_none() { "the" } else { "no" },
                    cfg.drain_timeout
                )));
            }
        }
    }
    drop(order_tx);
    for h in handles {
        let _ = h.join();
    }
    let realized = start.elapsed().as_secs_f64();
    if let Some(e) = failure {
        return Err(e);
    }
    let ExchangeRun { actor } = exchange.expect("exchange finished");

    // Deliver whatever the exchange sent after each trader stopped.
    let mut latency = LatencySamples::default();
    let mut outcomes = Vec::with_capacity(n);
    for run in runs.into_iter().map(|r| r.expect("every trader reported")) {
        let TraderRun {
            mut trader,
            feed,
            quote_calls,
            respond_calls,
            iterations,
            latency: samples,
        } = run;
        for msg in feed.try_iter() {
            match msg {
                FeedMsg::Assignment { asg, .. } => trader.assign(asg),
                FeedMsg::Fill(txn) => {
                    trader.on_fill(&txn)?;
                }
                FeedMsg::Market(_) | FeedMsg::Rejected { .. } => {}
            }
        }
        latency.merge(samples);
        outcomes.push(TraderOutcome {
            id: trader.id(),
            algo: trader.algo(),
            side: trader.side(),
            profit: trader.balance(),
            blotter: trader.common.blotter,
            quote_calls,
            respond_calls,
            iterations,
        });
    }
    let algos: Vec<_> = outcomes.iter().map(|o| o.algo).collect();
    Ok(SessionResult {
        seed: session.seed,
        appt_by_algo: SessionResult::compute_appt(&outcomes),
        polls: outcomes.iter().map(|o| o.iterations).sum(),
        traders: outcomes,
        tape: actor.tape,
        market_changes: actor.market_changes,
        rejected_orders: actor.rejected + actor.stale,
        latency: Some(latency.summarize(algos)),
        realized_duration: realized,
        provenance: Some(Provenance {
            seed: session.seed,
            parallelism: format!("{:?}", cfg.parallelism).to_lowercase(),
            delay_profile_ms: cfg.delay_profile.clone(),
            host: host_descriptor(),
        }),
        fifo_violations: actor.fifo_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::RosterEntry;

    fn actor_with(ids: &[u32]) -> (ExchangeActor, Vec<Receiver<FeedMsg>>) {
        let mut feeds = HashMap::new();
        let mut rxs = Vec::new();
        for &i in ids {
            let (tx, rx) = mpsc::channel();
            feeds.insert(TraderId(i), tx);
            rxs.push(rx);
        }
        (ExchangeActor::new(feeds), rxs)
    }

    fn asg(id: u32, side: Side, limit: Price) -> Assignment {
        Assignment {
            trader: TraderId(id),
            side,
            limit,
            issue_time: 0.0,
        }
    }

    fn order(id: u32, side: Side, price: Price, seq: u64) -> OrderMsg {
        OrderMsg {
            trader: TraderId(id),
            side,
            price,
            round: 0,
            seq,
        }
    }

    #[test]
    fn queued_bid_then_ask_trades_at_resting_price() {
        let (mut ex, rxs) = actor_with(&[1, 2]);
        ex.replenish(0, vec![asg(1, Side::Bid, 120), asg(2, Side::Ask, 80)]);
        ex.order(order(1, Side::Bid, 100, 1), 1.0);
        assert_eq!(ex.book.best_bid(), Some(100));
        ex.order(order(2, Side::Ask, 90, 1), 2.0);
        assert_eq!(ex.tape.len(), 1);
        assert_eq!(ex.tape[0].txn.price, 100);
        assert_eq!(ex.tape[0].joint_surplus(), 40);
        // Each party got its assignment first, then the fill.
        for rx in &rxs {
            let msgs: Vec<_> = rx.try_iter().collect();
            assert!(matches!(msgs[0], FeedMsg::Assignment { .. }));
            assert!(msgs.iter().any(|m| matches!(m, FeedMsg::Fill(_))));
        }
    }

    #[test]
    fn stale_and_post_fill_orders_are_dropped() {
        let (mut ex, _rxs) = actor_with(&[1, 2]);
        ex.replenish(3, vec![asg(1, Side::Bid, 120), asg(2, Side::Ask, 80)]);
        let mut old = order(1, Side::Bid, 100, 1);
        old.round = 2;
        ex.order(old, 0.0);
        assert_eq!(ex.book.bid_depth(), 0);
        let mut b = order(1, Side::Bid, 100, 2);
        b.round = 3;
        let mut s = order(2, Side::Ask, 90, 1);
        s.round = 3;
        ex.order(b.clone(), 0.0);
        ex.order(s, 0.0);
        b.seq = 3;
        ex.order(b, 0.0);
        assert_eq!(ex.tape.len(), 1);
        assert_eq!(ex.book.bid_depth(), 0);
        assert_eq!(ex.stale, 2);
        assert_eq!(ex.fifo_violations, 0);
    }

    #[test]
    fn out_of_band_order_is_reported_to_its_trader() {
        let (mut ex, rxs) = actor_with(&[1]);
        ex.replenish(0, vec![asg(1, Side::Bid, 120)]);
        ex.order(order(1, Side::Bid, 900, 1), 0.0);
        assert_eq!(ex.rejected, 1);
        assert!(rxs[0].try_iter().any(|m| matches!(m, FeedMsg::Rejected { seq: 1 })));
    }

    #[test]
    fn out_of_order_sequence_is_flagged() {
        let (mut ex, _rxs) = actor_with(&[1]);
        ex.replenish(0, vec![asg(1, Side::Bid, 120)]);
        ex.order(order(1, Side::Bid, 90, 2), 0.0);
        ex.order(order(1, Side::Bid, 91, 1), 0.0);
        assert_eq!(ex.fifo_violations, 1);
    }

    fn tiny(algo: Algo) -> ThreadedConfig {
        let roster = (0..4)
            .map(|i| RosterEntry {
                id: TraderId(i),
                algo,
                side: if i < 2 { Side::Bid } else { Side::Ask },
            })
            .collect();
        let mut cfg = ThreadedConfig::new(SessionConfig::new(roster, 5));
        cfg.wall_duration = 0.3;
        cfg
    }

    #[test]
    fn short_session_terminates_and_conserves_surplus() {
        for par in [Parallelism::Serialized, Parallelism::Full] {
            let mut cfg = tiny(Algo::Zic);
            cfg.parallelism = par;
            let r = run_session_threaded(&cfg).unwrap();
            assert!(r.realized_duration < cfg.wall_duration + cfg.drain_timeout);
            r.check_surplus_conservation().unwrap();
            assert_eq!(r.lost_fills(), 0);
            assert_eq!(r.fifo_violations, 0);
            assert!(r.provenance.is_some());
        }
    }

    #[test]
    fn zero_capacity_queue_is_invalid() {
        let mut cfg = tiny(Algo::Zic);
        cfg.queue_capacity = 0;
        assert!(matches!(
            run_session_threaded(&cfg),
            Err(EngineError::ConfigInvalid(_))
        ));
    }
}
