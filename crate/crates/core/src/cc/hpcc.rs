//! Telemetry-driven rate control in the style of HPCC.
//!
//! Each probe carries the bottleneck port's queue length and cumulative
//! transmitted bytes. Utilization is `U = q / (B * T) + tx_rate / B` with `B`
//! the port rate and `T` the base RTT. Rates are computed from a reference
//! rate that is refreshed at most once per RTT:
//!
//! * `U >= 1`: `ref / U + ai`, stage reset
//! * `U < eta` after `max_stage` additive steps: `ref * eta / U + ai`, stage reset
//! * otherwise: `ref + ai`, stage advanced

use crate::cc::{CcAlgorithm, CcEvent, CcEventKind, FlowView};
use crate::packet::Telemetry;
use crate::units::SimTime;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct HpccParams {
    pub eta: f64,
    pub max_stage: u32,
    pub ai_bps: f64,
}

impl Default for HpccParams {
    fn default() -> Self {
        HpccParams {
            eta: 0.95,
            max_stage: 5,
            ai_bps: 0.5e9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hpcc {
    pub params: HpccParams,
    pub rate: f64,
    pub reference: f64,
    pub stage: u32,
    last_ref_update: SimTime,
    prev: Option<Telemetry>,
    pub last_u: f64,
}

impl Hpcc {
    pub fn new(params: HpccParams) -> Self {
        Hpcc {
            params,
            rate: 0.0,
            reference: 0.0,
            stage: 0,
            last_ref_update: SimTime::ZERO,
            prev: None,
            last_u: 0.0,
        }
    }

    /// Normalized utilization from two consecutive telemetry samples.
    pub fn utilization(prev: &Telemetry, cur: &Telemetry, base_rtt_ns: u64) -> Option<f64> {
        let dt = cur.ts.since(prev.ts);
        if dt == 0 || cur.tx_bytes_cum < prev.tx_bytes_cum {
            return None;
        }
        let b = cur.port_rate_bps as f64;
        let tx_rate = (cur.tx_bytes_cum - prev.tx_bytes_cum) as f64 * 8.0 * 1e9 / dt as f64;
        let queue_term = cur.queue_bytes as f64 * 8.0 / (b * base_rtt_ns as f64 * 1e-9);
        Some(queue_term + tx_rate / b)
    }

    /// Rate for utilization `u` given the current reference and stage, and
    /// the stage to commit if the reference is refreshed.
    pub fn rate_for(&self, u: f64) -> (f64, u32) {
        let p = self.params;
        if u >= 1.0 {
            (self.reference / u + p.ai_bps, 0)
        } else if u < p.eta && self.stage >= p.max_stage {
            (self.reference * p.eta / u.max(1e-6) + p.ai_bps, 0)
        } else {
            (self.reference + p.ai_bps, self.stage + 1)
        }
    }
}

impl Default for Hpcc {
    fn default() -> Self {
        Self::new(HpccParams::default())
    }
}

impl CcAlgorithm for Hpcc {
    fn init(&mut self, view: &FlowView, now: SimTime) {
        self.rate = view.rate_bps as f64;
        self.reference = self.rate;
        self.stage = 0;
        self.last_ref_update = now;
        self.prev = None;
    }

    fn on_event(&mut self, view: &FlowView, ev: &CcEvent) -> Option<f64> {
        let CcEventKind::ProbeReturned { rtt_ns, telemetry: Some(tel) } = ev.kind else {
            return None;
        };
        let prev = self.prev.replace(tel)?;
        let u = Self::utilization(&prev, &tel, view.base_rtt_ns)?;
        self.last_u = u;
        let (rate, stage) = self.rate_for(u);
        self.rate = rate.clamp(view.min_rate_bps as f64, view.link_rate_bps as f64);
        if ev.now.since(self.last_ref_update) >= rtt_ns {
            self.reference = self.rate;
            self.stage = stage;
            self.last_ref_update = ev.now;
        }
        Some(self.rate)
    }
}
