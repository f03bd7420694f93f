//! Packet-level datacenter congestion simulator, rate-control baselines and
//! a recurrent policy trained with an analytic deterministic policy gradient.
//!
//! The crate is `no_std` (it needs `alloc`); file formats, CLI and threading
//! live in the `ccgym` companion crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod adpg;
pub mod cc;
pub mod error;
pub mod event;
pub mod flow;
pub mod host;
pub mod metrics;
pub mod packet;
pub mod policy;
pub mod recorder;
pub mod scenario;
pub mod sim;
pub mod switch;
pub mod topology;
pub mod units;

pub use error::{AdpgError, ConfigError, MetricsError, PolicyError, SimError};
pub use sim::{SimOptions, Simulation};
pub use units::SimTime;
