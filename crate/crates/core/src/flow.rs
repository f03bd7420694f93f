use crate::packet::{FlowId, HostId, PortId};
use crate::units::{credit_for, SimTime, CREDIT_PER_BYTE};

/// How large a burst a flow waits for before it is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BurstSizing {
    pub mtu_bytes: u32,
    pub max_burst_bytes: u32,
    pub probe_bytes: u32,
    /// When set, a flow is scheduled once it has earned `rate * interval`
    /// bytes plus a probe instead of waiting for a full burst. A slow flow
    /// may then send a probe with no data in front of it.
    pub interval_ns: Option<u64>,
}

impl BurstSizing {
    pub fn burst_bytes(&self, rate_bps: u64) -> u32 {
        match self.interval_ns {
            None => self.max_burst_bytes,
            Some(iv) => {
                let b = (rate_bps as u128 * iv as u128 / 8_000_000_000) as u64;
                b.min(self.max_burst_bytes as u64) as u32
            }
        }
    }
}

/// Static description of a flow, as produced by the scenario builders.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSpec {
    pub id: FlowId,
    pub src_host: HostId,
    pub dst_host: HostId,
    /// Switch egress port the flow's data crosses.
    pub port: PortId,
    pub start_time: SimTime,
    /// `None` for an infinite backlog.
    pub size_bytes: Option<u64>,
    pub initial_rate_bps: u64,
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub id: FlowId,
    pub src_host: HostId,
    pub dst_host: HostId,
    pub port: PortId,
    rate_bps: u64,
    pub base_rtt_ns: u64,
    pub last_rtt_ns: Option<u64>,
    /// CNPs received since the last rate decision.
    pub cnp_count: u32,
    /// NACKs received since the last rate decision.
    pub nack_count: u32,
    pub bytes_sent: u64,
    pub bytes_delivered: u64,
    pub bytes_dropped: u64,
    pub active: bool,
    pub size_bytes: Option<u64>,
    /// Bytes still to be handed to the NIC (finite flows only).
    remaining: Option<u64>,
    pub start_time: SimTime,
    pub finish_time: Option<SimTime>,
    /// Send credit in `rate * ns` units, valid as of `credit_time`.
    credit: u128,
    credit_time: SimTime,
    pub decisions: u64,
}

impl FlowState {
    pub fn new(spec: &FlowSpec, base_rtt_ns: u64) -> Self {
        FlowState {
            id: spec.id,
            src_host: spec.src_host,
            dst_host: spec.dst_host,
            port: spec.port,
            rate_bps: spec.initial_rate_bps,
            base_rtt_ns,
            last_rtt_ns: None,
            cnp_count: 0,
            nack_count: 0,
            bytes_sent: 0,
            bytes_delivered: 0,
            bytes_dropped: 0,
            active: false,
            size_bytes: spec.size_bytes,
            remaining: spec.size_bytes,
            start_time: spec.start_time,
            finish_time: None,
            credit: 0,
            credit_time: spec.start_time,
            decisions: 0,
        }
    }

    pub fn rate_bps(&self) -> u64 {
        self.rate_bps
    }

    pub fn remaining_bytes(&self) -> Option<u64> {
        self.remaining
    }

    pub fn is_finite(&self) -> bool {
        self.size_bytes.is_some()
    }

    pub fn bytes_in_flight(&self) -> u64 {
        self.bytes_sent - self.bytes_delivered - self.bytes_dropped
    }

    /// Bytes the next burst may carry before the credit cap applies.
    pub fn burst_limit(&self, sizing: &BurstSizing) -> u64 {
        let b = sizing.burst_bytes(self.rate_bps) as u64;
        match self.remaining {
            Some(r) => r.min(b),
            None => b,
        }
    }

    /// Credit a flow needs before it is worth scheduling: one burst plus its
    /// probe, or whatever is left of a finite flow.
    pub fn credit_threshold(&self, sizing: &BurstSizing) -> u128 {
        (self.burst_limit(sizing) + sizing.probe_bytes as u64) as u128 * CREDIT_PER_BYTE
    }

    /// Bring the credit up to `now` at the current rate, capped at the threshold.
    pub fn accrue(&mut self, now: SimTime, sizing: &BurstSizing) {
        if now <= self.credit_time {
            return;
        }
        let cap = self.credit_threshold(sizing);
        let earned = credit_for(self.rate_bps, now - self.credit_time);
        self.credit = (self.credit + earned).min(cap.max(self.credit));
        self.credit_time = now;
    }

    pub fn credit(&self) -> u128 {
        self.credit
    }

    /// Seed the credit directly; used when a flow starts.
    pub fn set_credit(&mut self, credit: u128, at: SimTime) {
        self.credit = credit;
        self.credit_time = at;
    }

    pub fn debit(&mut self, bytes: u64) {
        self.credit = self.credit.saturating_sub(bytes as u128 * CREDIT_PER_BYTE);
    }

    /// Earliest time the flow reaches its scheduling threshold at the current rate.
    pub fn eligible_at(&self, sizing: &BurstSizing) -> SimTime {
        let need = self.credit_threshold(sizing);
        if self.credit >= need {
            return self.credit_time;
        }
        let missing = need - self.credit;
        let ns = missing.div_ceil(self.rate_bps as u128);
        self.credit_time + ns.min(u64::MAX as u128 / 4) as u64
    }

    /// Switch to a new rate. Credit earned so far is kept at the old rate.
    pub fn set_rate(&mut self, now: SimTime, rate_bps: u64, sizing: &BurstSizing) {
        debug_assert!(rate_bps > 0);
        self.accrue(now, sizing);
        self.rate_bps = rate_bps;
    }

    /// Hand `bytes` of data to the NIC.
    pub fn take(&mut self, bytes: u64) {
        self.bytes_sent += bytes;
        if let Some(r) = self.remaining.as_mut() {
            *r -= bytes.min(*r);
        }
    }

    /// A dropped packet's bytes go back into the backlog of a finite flow.
    pub fn on_drop(&mut self, bytes: u64) {
        self.bytes_dropped += bytes;
        if let Some(r) = self.remaining.as_mut() {
            *r += bytes;
        }
    }

    pub fn on_delivered(&mut self, bytes: u64, now: SimTime) {
        self.bytes_delivered += bytes;
        if let Some(size) = self.size_bytes {
            if self.bytes_delivered >= size && self.finish_time.is_none() {
                self.finish_time = Some(now);
            }
        }
    }

    /// True while there is still data to hand to the NIC.
    pub fn has_backlog(&self) -> bool {
        self.remaining.is_none_or(|r| r > 0)
    }

    pub fn rate_norm(&self, link_rate_bps: u64) -> f64 {
        self.rate_bps as f64 / link_rate_bps as f64
    }
}
