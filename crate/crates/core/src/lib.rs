//! Continuous double auction market simulator.
//!
//! Two interchangeable engines run the same traders against the same
//! exchange:
//!
//! - [`engine::run_session_sequential`] polls one randomly chosen trader per
//!   time slice of `1/N` virtual seconds. A trader's compute time never
//!   affects what happens in the market.
//! - [`engine::run_session_threaded`] gives every trader its own thread and
//!   the exchange another; orders reach the exchange through a bounded FIFO
//!   queue, so slow traders get fewer chances to act.
//!
//! [`harness`] sweeps the population ratio of two algorithms and counts
//! which one earns the higher average profit per trader in each session.

pub mod config;
pub mod engine;
pub mod exchange;
pub mod harness;
pub mod market;
pub mod seed;
pub mod session;
pub mod traders;
pub mod types;

pub use types::{Algo, OrderId, Price, Side, Time, TraderId, SYS_MAX, SYS_MIN};
