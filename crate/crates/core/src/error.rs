use alloc::string::String;

use crate::packet::{FlowId, PortId};
use crate::units::SimTime;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("event scheduled at {at} but the clock is already at {now}")]
    EventInPast { at: SimTime, now: SimTime },
    #[error("dequeue on empty port {0}")]
    DequeueEmpty(PortId),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("flow {flow} is not routable: {reason}")]
    Unroutable { flow: FlowId, reason: &'static str },
    #[error("invalid network parameter `{0}`")]
    InvalidParameter(&'static str),
    #[error("scenario: {0}")]
    Scenario(String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolicyError {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("learning rate must be positive and finite")]
    BadLearningRate,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AdpgError {
    #[error("flow {0} has no base RTT yet")]
    Uninitialized(FlowId),
    #[error("rate must be positive, got {0}")]
    NonPositiveRate(f64),
    #[error("rollout for flow {0} was recorded without a tape")]
    MissingTape(FlowId),
    #[error("training diverged at iteration {iteration}")]
    Diverged { iteration: usize },
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("measurement window is empty")]
    EmptyWindow,
    #[error("reports come from different scenarios: `{0}` vs `{1}`")]
    ScenarioMismatch(String, String),
}
