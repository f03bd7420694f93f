//! Delay-target AIMD in the style of SWIFT.

use crate::cc::{CcAlgorithm, CcEvent, CcEventKind, FlowView};
use crate::units::SimTime;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SwiftParams {
    /// Target delay as a multiple of the flow's base RTT.
    pub target_factor: f64,
    pub ai_bps: f64,
    /// Smallest multiplicative factor a single decrease may apply.
    pub md: f64,
    pub beta: f64,
}

impl Default for SwiftParams {
    fn default() -> Self {
        SwiftParams {
            target_factor: 2.0,
            ai_bps: 0.5e9,
            md: 0.7,
            beta: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Swift {
    pub params: SwiftParams,
    pub rate: f64,
    last_decrease: Option<SimTime>,
    last_increase: SimTime,
    last_rtt_ns: u64,
}

impl Swift {
    pub fn new(params: SwiftParams) -> Self {
        Swift {
            params,
            rate: 0.0,
            last_decrease: None,
            last_increase: SimTime(0),
            last_rtt_ns: 0,
        }
    }

    fn can_decrease(&self, now: SimTime) -> bool {
        self.last_decrease.is_none_or(|t| now.since(t) >= self.last_rtt_ns)
    }
}

impl Default for Swift {
    fn default() -> Self {
        Self::new(SwiftParams::default())
    }
}

impl CcAlgorithm for Swift {
    fn init(&mut self, view: &FlowView, now: SimTime) {
        self.rate = view.rate_bps as f64;
        self.last_decrease = None;
        self.last_increase = now;
        self.last_rtt_ns = view.base_rtt_ns;
    }

    fn on_event(&mut self, view: &FlowView, ev: &CcEvent) -> Option<f64> {
        let p = self.params;
        let link = view.link_rate_bps as f64;
        let floor = view.min_rate_bps as f64;
        match ev.kind {
            CcEventKind::ProbeReturned { rtt_ns, .. } => {
                self.last_rtt_ns = rtt_ns;
                let target = p.target_factor * view.base_rtt_ns as f64;
                let rtt = rtt_ns as f64;
                if rtt < target {
                    // ai per RTT, however many probes come back in it
                    let share = (ev.now.since(self.last_increase) as f64 / rtt.max(1.0)).min(1.0);
                    self.rate = (self.rate + p.ai_bps * share).min(link);
                    self.last_increase = ev.now;
                } else if self.can_decrease(ev.now) {
                    let factor = (1.0 - p.beta * (rtt - target) / rtt).max(p.md);
                    self.rate = (self.rate * factor).max(floor);
                    self.last_decrease = Some(ev.now);
                } else {
                    return None;
                }
                Some(self.rate)
            }
            CcEventKind::NackReceived if self.can_decrease(ev.now) => {
                self.rate = (self.rate * p.md).max(floor);
                self.last_decrease = Some(ev.now);
                Some(self.rate)
            }
            _ => None,
        }
    }
}
