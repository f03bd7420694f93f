//! Per-flow agent, reward, key-separated rollouts and the analytic
//! deterministic policy-gradient trainer.

pub mod agent;
pub mod fixed_point;
pub mod gradient;
pub mod replay;
pub mod reward;
pub mod train;

pub use agent::AdpgAgent;
pub use fixed_point::fixed_point_check;
pub use gradient::{adpg_gradient, CoeffMode, GradStats};
pub use replay::{KeySeparatedReplay, ReplayKey, RolloutStep};
pub use reward::{reward, RewardTerms};
pub use train::{CollectExecutor, Collected, IterationRecord, Sequential, TrainConfig, TrainEnv, Trainer};
