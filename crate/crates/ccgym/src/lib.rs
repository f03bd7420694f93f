//! File formats, parallel execution and reporting around `ccgym-core`.

pub use ccgym_core as core;

pub mod bench;
pub mod checkpoint;
pub mod config;
pub mod probe;
pub mod run;
pub mod train;

pub use checkpoint::Checkpoint;
pub use run::{run_scenario, Algo, Controller};
