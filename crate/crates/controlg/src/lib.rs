//! Closed-loop scheduler for training several objectives on one shared
//! representation.
//!
//! The loop has three stages, each usable on its own:
//!
//! ```text
//!            sense                 plan                  control
//!   +------------------+   +----------------+   +---------------------+
//!   | spectral demand  |   | difficulty     |   | deficit tracking    |
//!   | (Rayleigh        |-->| scores, slack  |-->| (PID on N_ref - N,  |
//!   |  quotient) +     |   | log-volume,    |   |  softmax + epsilon  |
//!   | gradient         |   | allocation     |   |  floor)             |
//!   | interference     |   | f = a / sum(a) |   |                     |
//!   +------------------+   +----------------+   +----------+----------+
//!            ^                                             |
//!            |            shared representation            |
//!            +-------------- (block updates) <-------------+
//! ```
//!
//! [`spectral`] measures how much high-frequency structure a task still
//! needs from the graph; [`mgda`] turns per-task gradients into a
//! min-norm mixture and conflict scores; [`state`] keeps robust
//! difficulty and smoothed-loss estimates; [`planner`] converts slack
//! against reference losses into an allocation; [`controller`] executes
//! the allocation with bounded drift. [`sim`] ties the stages into a
//! reproducible synthetic run, [`trace`] reads and writes the canonical
//! record format, [`config`] parses run files, and [`verify`] holds the
//! oracle-backed property suites behind `controlg verify`.
//!
//! Simulations are deterministic: a run is a pure function of its
//! config and seed (see [`rng`] for the stream layout).

pub mod config;
pub mod controller;
pub mod error;
pub mod mgda;
mod numfmt;
pub mod planner;
pub mod rng;
pub mod sim;
pub mod spectral;
pub mod state;
pub mod trace;
pub mod verify;

pub use error::{Error, Result};
