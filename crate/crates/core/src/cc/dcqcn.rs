//! ECN-driven rate control in the style of DCQCN.
//!
//! A CNP cuts the current rate by `alpha / 2` and remembers the pre-cut rate
//! as the recovery target. Every timer period without a CNP decays `alpha`
//! and walks the rate back up: halfway to the target for the first
//! `fast_recovery_steps` periods, then with additive and finally hyper
//! increments of the target itself.

use crate::cc::{CcAlgorithm, CcEvent, CcEventKind, FlowView};
use crate::units::SimTime;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DcqcnParams {
    pub g: f64,
    pub timer_ns: u64,
    pub initial_alpha: f64,
    pub fast_recovery_steps: u32,
    pub additive_bps: f64,
    pub hyper_bps: f64,
}

impl Default for DcqcnParams {
    fn default() -> Self {
        DcqcnParams {
            g: 1.0 / 16.0,
            timer_ns: 55_000,
            initial_alpha: 1.0,
            fast_recovery_steps: 5,
            additive_bps: 1e9,
            hyper_bps: 5e9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dcqcn {
    pub params: DcqcnParams,
    pub alpha: f64,
    pub current: f64,
    pub target: f64,
    /// Timer periods since the last CNP.
    pub stage: u32,
    cnp_in_period: bool,
}

impl Dcqcn {
    pub fn new(params: DcqcnParams) -> Self {
        Dcqcn {
            params,
            alpha: params.initial_alpha,
            current: 0.0,
            target: 0.0,
            stage: 0,
            cnp_in_period: false,
        }
    }
}

impl Default for Dcqcn {
    fn default() -> Self {
        Self::new(DcqcnParams::default())
    }
}

impl CcAlgorithm for Dcqcn {
    fn init(&mut self, view: &FlowView, _now: SimTime) {
        self.current = view.rate_bps as f64;
        self.target = self.current;
        self.alpha = self.params.initial_alpha;
        self.stage = 0;
        self.cnp_in_period = false;
    }

    fn on_event(&mut self, view: &FlowView, ev: &CcEvent) -> Option<f64> {
        let p = &self.params;
        let link = view.link_rate_bps as f64;
        let floor = view.min_rate_bps as f64;
        match ev.kind {
            CcEventKind::CnpReceived => {
                self.target = self.current;
                self.current = (self.current * (1.0 - self.alpha / 2.0)).max(floor);
                self.alpha = ((1.0 - p.g) * self.alpha + p.g).min(1.0);
                self.stage = 0;
                self.cnp_in_period = true;
                Some(self.current)
            }
            CcEventKind::TimerFired => {
                if self.cnp_in_period {
                    self.cnp_in_period = false;
                    return None;
                }
                self.alpha *= 1.0 - p.g;
                self.stage += 1;
                let f = p.fast_recovery_steps;
                if self.stage > 2 * f {
                    self.target += (self.stage - 2 * f) as f64 * p.hyper_bps;
                } else if self.stage > f {
                    self.target += p.additive_bps;
                }
                self.target = self.target.min(link);
                self.current = ((self.current + self.target) / 2.0).min(link);
                Some(self.current)
            }
            CcEventKind::ProbeReturned { .. } | CcEventKind::NackReceived => None,
        }
    }

    fn timer_interval_ns(&self) -> Option<u64> {
        Some(self.params.timer_ns)
    }
}
