//! Rate-controller interface and the rule-based baselines.

use alloc::vec::Vec;

use crate::packet::{FlowId, Telemetry};
use crate::units::SimTime;

pub mod dcqcn;
pub mod hpcc;
pub mod swift;

pub use dcqcn::{Dcqcn, DcqcnParams};
pub use hpcc::{Hpcc, HpccParams};
pub use swift::{Swift, SwiftParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CcEventKind {
    ProbeReturned { rtt_ns: u64, telemetry: Option<Telemetry> },
    CnpReceived,
    NackReceived,
    TimerFired,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcEvent {
    pub kind: CcEventKind,
    pub now: SimTime,
    pub flow_id: FlowId,
}

/// What a controller may see of its flow when an event arrives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowView {
    pub flow_id: FlowId,
    pub rate_bps: u64,
    pub base_rtt_ns: u64,
    pub link_rate_bps: u64,
    pub min_rate_bps: u64,
    /// CNPs since the last probe-triggered decision, this event included.
    pub cnp_count: u32,
    pub nack_count: u32,
}

impl FlowView {
    pub fn rate_norm(&self) -> f64 {
        self.rate_bps as f64 / self.link_rate_bps as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CcDecision {
    pub new_rate_bps: u64,
}

/// The `[min, link]` rate range every decision is forced into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RateClamp {
    pub min_bps: u64,
    pub max_bps: u64,
}

impl RateClamp {
    pub fn new(min_bps: u64, max_bps: u64) -> Self {
        assert!(0 < min_bps && min_bps < max_bps);
        RateClamp { min_bps, max_bps }
    }

    pub fn apply(&self, rate_bps: f64) -> CcDecision {
        let r = if rate_bps.is_nan() {
            self.min_bps as f64
        } else {
            rate_bps.clamp(self.min_bps as f64, self.max_bps as f64)
        };
        CcDecision {
            new_rate_bps: (libm::round(r) as u64).clamp(self.min_bps, self.max_bps),
        }
    }
}

/// Anything that sets flow rates in a running simulation.
pub trait RateController {
    /// A flow begins sending. `Some(rate)` overrides its initial rate.
    fn on_flow_start(&mut self, _view: &FlowView, _now: SimTime) -> Option<f64> {
        None
    }

    /// React to `ev`; `Some(rate)` requests a new rate in bit/s before clamping.
    fn on_event(&mut self, view: &FlowView, ev: &CcEvent) -> Option<f64>;

    /// Period of `TimerFired` events per active flow, if the controller wants them.
    fn timer_interval_ns(&self) -> Option<u64> {
        None
    }
}

/// One flow's instance of a rule-based algorithm.
pub trait CcAlgorithm {
    fn init(&mut self, view: &FlowView, now: SimTime);
    fn on_event(&mut self, view: &FlowView, ev: &CcEvent) -> Option<f64>;
    fn timer_interval_ns(&self) -> Option<u64> {
        None
    }
}

/// Runs an independent copy of `A` for every flow.
#[derive(Debug, Clone)]
pub struct PerFlow<A> {
    template: A,
    states: Vec<Option<A>>,
}

impl<A: CcAlgorithm + Clone> PerFlow<A> {
    pub fn new(template: A) -> Self {
        PerFlow { template, states: Vec::new() }
    }

    pub fn state(&self, flow: FlowId) -> Option<&A> {
        self.states.get(flow as usize)?.as_ref()
    }
}

impl<A: CcAlgorithm + Clone> RateController for PerFlow<A> {
    fn on_flow_start(&mut self, view: &FlowView, now: SimTime) -> Option<f64> {
        let i = view.flow_id as usize;
        if self.states.len() <= i {
            self.states.resize(i + 1, None);
        }
        let mut st = self.template.clone();
        st.init(view, now);
        self.states[i] = Some(st);
        None
    }

    fn on_event(&mut self, view: &FlowView, ev: &CcEvent) -> Option<f64> {
        self.states.get_mut(ev.flow_id as usize)?.as_mut()?.on_event(view, ev)
    }

    fn timer_interval_ns(&self) -> Option<u64> {
        self.template.timer_interval_ns()
    }
}

/// Holds every flow at a fixed fraction of the link rate.
#[derive(Debug, Clone, Copy)]
pub struct FixedRate {
    pub rate_bps: u64,
}

impl RateController for FixedRate {
    fn on_flow_start(&mut self, _view: &FlowView, _now: SimTime) -> Option<f64> {
        Some(self.rate_bps as f64)
    }

    fn on_event(&mut self, view: &FlowView, _ev: &CcEvent) -> Option<f64> {
        (view.rate_bps != self.rate_bps).then_some(self.rate_bps as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamp_bounds() {
        let c = RateClamp::new(10, 1000);
        assert_eq!(c.apply(5000.0).new_rate_bps, 1000);
        assert_eq!(c.apply(-3.0).new_rate_bps, 10);
        assert_eq!(c.apply(f64::NAN).new_rate_bps, 10);
        assert_eq!(c.apply(f64::INFINITY).new_rate_bps, 1000);
        assert_eq!(c.apply(500.4).new_rate_bps, 500);
    }
}
