//! Per-host round-robin flow scheduler and burst formation.

use alloc::vec::Vec;

use crate::flow::{BurstSizing, FlowState};
use crate::packet::{FlowId, HostId};
use crate::units::{SimTime, Wire, CREDIT_PER_BYTE};

/// Packets making up one scheduled burst. Data packets come first; a probe
/// closes every burst that sends anything.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Burst {
    pub data_sizes: Vec<u32>,
    pub probe_bytes: Option<u32>,
}

impl Burst {
    pub fn data_bytes(&self) -> u64 {
        self.data_sizes.iter().map(|&s| s as u64).sum()
    }

    pub fn total_bytes(&self) -> u64 {
        self.data_bytes() + self.probe_bytes.unwrap_or(0) as u64
    }

    pub fn is_empty(&self) -> bool {
        self.data_sizes.is_empty()
    }
}

/// Form the burst `flow` is entitled to at `now` and debit its credit.
///
/// The burst carries as many whole packets as the credit covers after
/// reserving room for the probe, capped at the flow's burst size. The last packet
/// of a finite flow may be short. Leftover credit carries to the next burst.
/// With interval sizing a burst too small for one packet is a lone probe.
pub fn schedule_burst(flow: &mut FlowState, now: SimTime, sizing: &BurstSizing) -> Burst {
    if !flow.active || !flow.has_backlog() {
        return Burst::default();
    }
    let (mtu, probe_bytes) = (sizing.mtu_bytes, sizing.probe_bytes);
    flow.accrue(now, sizing);
    let credit_bytes = (flow.credit() / CREDIT_PER_BYTE) as u64;
    let mut budget = credit_bytes.saturating_sub(probe_bytes as u64).min(sizing.max_burst_bytes as u64);
    let mut remaining = flow.remaining_bytes().unwrap_or(u64::MAX);
    let mut burst = Burst::default();
    while budget > 0 && remaining > 0 {
        let size = (mtu as u64).min(remaining);
        if size > budget {
            break;
        }
        burst.data_sizes.push(size as u32);
        budget -= size;
        remaining -= size;
    }
    if burst.is_empty() && (sizing.interval_ns.is_none() || credit_bytes < probe_bytes as u64) {
        return burst;
    }
    burst.probe_bytes = Some(probe_bytes);
    flow.take(burst.data_bytes());
    flow.debit(burst.total_bytes());
    burst
}

#[derive(Debug, Clone)]
pub struct HostSched {
    pub id: HostId,
    pub flow_ids: Vec<FlowId>,
    cursor: usize,
    pub sizing: BurstSizing,
    pub link_rate_bps: u64,
    pub wire: Wire,
    /// Time of the one wake-up event that is still current; older ones are stale.
    pub wake_at: Option<SimTime>,
}

impl HostSched {
    pub fn new(id: HostId, link_rate_bps: u64, sizing: BurstSizing) -> Self {
        HostSched {
            id,
            flow_ids: Vec::new(),
            cursor: 0,
            sizing,
            link_rate_bps,
            wire: Wire::new(link_rate_bps),
            wake_at: None,
        }
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    /// Next flow in round-robin order that has reached its threshold at `now`.
    /// `flows` is indexed by flow id.
    pub fn pick(&mut self, now: SimTime, flows: &mut [FlowState]) -> Option<FlowId> {
        let n = self.flow_ids.len();
        for k in 0..n {
            let idx = (self.cursor + k) % n;
            let f = &mut flows[self.flow_ids[idx] as usize];
            if !f.active || !f.has_backlog() {
                continue;
            }
            f.accrue(now, &self.sizing);
            if f.eligible_at(&self.sizing) <= now {
                self.cursor = (idx + 1) % n;
                return Some(f.id);
            }
        }
        None
    }

    /// When this host should next look for work: once the NIC is free and some
    /// flow has earned a burst. `None` when no flow has data to send.
    pub fn next_wake(&self, now: SimTime, flows: &[FlowState]) -> Option<SimTime> {
        let earliest = self
            .flow_ids
            .iter()
            .map(|&id| &flows[id as usize])
            .filter(|f| f.active && f.has_backlog())
            .map(|f| f.eligible_at(&self.sizing))
            .min()?;
        Some(earliest.max(self.wire.busy_until()).max(now))
    }
}
