//! Recurrent rate policy: observations, float and int8 inference, backward
//! pass and optimizers.

use alloc::vec::Vec;

use crate::error::PolicyError;

pub mod net;
pub mod optim;
pub mod params;
pub mod quant;

pub use net::{action_grad, action_map, backward, backward_window, forward, PolicyState, StepTape};
pub use optim::{apply_update, Optimizer, OptimizerKind};
pub use params::{Layout, PolicyParams, TensorSpec};
pub use quant::{QTensor, QuantizedPolicy};

/// One observation feature. Log features keep the multiplicative structure
/// of rates and delays additive for the network; they are shifted and scaled
/// by fixed constants so that typical operating points land near zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Feature {
    RateNorm,
    LogRateNorm,
    RttInflation,
    LogRttInflation,
    CnpNorm,
    NackNorm,
}

impl Feature {
    pub const ALL: [Feature; 6] = [
        Feature::RateNorm,
        Feature::LogRateNorm,
        Feature::RttInflation,
        Feature::LogRttInflation,
        Feature::CnpNorm,
        Feature::NackNorm,
    ];

    pub fn code(self) -> u8 {
        Self::ALL.iter().position(|&f| f == self).unwrap() as u8
    }

    pub fn from_code(c: u8) -> Option<Feature> {
        Self::ALL.get(c as usize).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Feature::RateNorm => "rate_norm",
            Feature::LogRateNorm => "log_rate_norm",
            Feature::RttInflation => "rtt_inflation",
            Feature::LogRttInflation => "log_rtt_inflation",
            Feature::CnpNorm => "cnp_norm",
            Feature::NackNorm => "nack_norm",
        }
    }
}

/// Raw per-decision quantities a flow can observe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObsInput {
    pub rate_norm: f64,
    pub rtt_inflation: f64,
    pub cnp_count: u32,
    pub nack_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct ObsConfig {
    pub features: Vec<Feature>,
}

impl Default for ObsConfig {
    fn default() -> Self {
        ObsConfig {
            features: alloc::vec![Feature::LogRateNorm, Feature::LogRttInflation, Feature::CnpNorm, Feature::NackNorm],
        }
    }
}

// ln(rate) spans roughly [-4, 0] for the rates a shared bottleneck sees;
// ln(inflation) sits near 0.7 at the default target of 2.
const LOG_RATE_SHIFT: f64 = 2.0;
const LOG_RATE_SCALE: f64 = 0.5;
const LOG_INFL_SHIFT: f64 = 0.7;

fn squash(count: u32) -> f64 {
    let c = count as f64;
    c / (1.0 + c)
}

impl ObsConfig {
    pub fn dim(&self) -> usize {
        self.features.len()
    }

    pub fn build_into(&self, inp: &ObsInput, out: &mut Vec<f64>) {
        out.clear();
        let infl = inp.rtt_inflation.max(1e-6);
        let rate = inp.rate_norm.max(1e-9);
        out.extend(self.features.iter().map(|f| match f {
            Feature::RateNorm => rate,
            Feature::LogRateNorm => (libm::log(rate) + LOG_RATE_SHIFT) * LOG_RATE_SCALE,
            Feature::RttInflation => infl,
            Feature::LogRttInflation => libm::log(infl) - LOG_INFL_SHIFT,
            Feature::CnpNorm => squash(inp.cnp_count),
            Feature::NackNorm => squash(inp.nack_count),
        }));
    }

    pub fn build(&self, inp: &ObsInput) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        self.build_into(inp, &mut v);
        v
    }
}

/// A policy that can be stepped by an agent: the float network (which can
/// also record a tape for training) or its int8 mirror.
pub trait Policy {
    fn input_dim(&self) -> usize;
    fn step(&self, state: &PolicyState, obs: &[f64], want_tape: bool) -> Result<(f64, PolicyState, Option<StepTape>), PolicyError>;
}

impl Policy for PolicyParams {
    fn input_dim(&self) -> usize {
        self.layout.input
    }

    fn step(&self, state: &PolicyState, obs: &[f64], want_tape: bool) -> Result<(f64, PolicyState, Option<StepTape>), PolicyError> {
        let (raw, next, tape) = forward(self, state, obs)?;
        Ok((raw, next, want_tape.then_some(tape)))
    }
}

impl Policy for QuantizedPolicy {
    fn input_dim(&self) -> usize {
        self.input
    }

    fn step(&self, state: &PolicyState, obs: &[f64], _want_tape: bool) -> Result<(f64, PolicyState, Option<StepTape>), PolicyError> {
        let (raw, next) = self.forward(state, obs)?;
        Ok((raw, next, None))
    }
}
