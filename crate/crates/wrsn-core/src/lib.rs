//! Charger scheduling for wireless rechargeable sensor networks.
//!
//! The crate models three scheduling problems for a single mobile charger:
//!
//! * **P1** — charge as many mobile sensors as possible within a timespan,
//! * **P2** — maximize the charging payoff under a charger energy budget,
//! * **P3** — restore k-coverage of an area by charging sensors before
//!   their deadlines, at minimum traveling distance.
//!
//! [`instances`] defines the data model and generators, [`geometry`] the
//! disk-coverage machinery used by P3, [`graph`] the charging graphs,
//! [`envs`] the step/insert/reward environments shared by the learned and
//! heuristic solvers, [`embed`] the graph-embedding value function,
//! [`dqn`] the training loop, and [`baselines`] the comparison solvers.

pub mod baselines;
pub mod dqn;
pub mod embed;
pub mod envs;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod graph;
pub mod instances;
pub mod point;

pub use error::Error;

/// Index of a sensor node within an instance (`0..n`).
pub type NodeId = usize;

pub type Result<T> = std::result::Result<T, Error>;
