//! Time-bucketed counters collected while a simulation runs.

use alloc::vec::Vec;

use crate::packet::{FlowId, PortId};
use crate::units::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RateSample {
    pub time: SimTime,
    pub flow: FlowId,
    pub rate_bps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RttSample {
    pub time: SimTime,
    pub flow: FlowId,
    pub rtt_ns: u64,
}

#[derive(Debug, Clone)]
pub struct Recorder {
    pub bucket_ns: u64,
    /// Data bytes delivered to the receiver behind each port, per bucket.
    pub port_delivered: Vec<Vec<u64>>,
    /// Bytes of any kind dropped at each port, per bucket.
    pub port_dropped: Vec<Vec<u64>>,
    pub port_qdelay_sum: Vec<Vec<u64>>,
    pub port_qdelay_count: Vec<Vec<u64>>,
    pub flow_delivered: Vec<Vec<u64>>,
    pub rates: Option<Vec<RateSample>>,
    pub rtts: Option<Vec<RttSample>>,
}

fn bump(v: &mut Vec<u64>, bucket: usize, x: u64) {
    if v.len() <= bucket {
        v.resize(bucket + 1, 0);
    }
    v[bucket] += x;
}

impl Recorder {
    pub fn new(bucket_ns: u64, ports: usize, flows: usize, samples: bool) -> Self {
        assert!(bucket_ns > 0);
        Recorder {
            bucket_ns,
            port_delivered: alloc::vec![Vec::new(); ports],
            port_dropped: alloc::vec![Vec::new(); ports],
            port_qdelay_sum: alloc::vec![Vec::new(); ports],
            port_qdelay_count: alloc::vec![Vec::new(); ports],
            flow_delivered: alloc::vec![Vec::new(); flows],
            rates: samples.then(Vec::new),
            rtts: samples.then(Vec::new),
        }
    }

    pub fn bucket(&self, t: SimTime) -> usize {
        (t.as_nanos() / self.bucket_ns) as usize
    }

    pub fn delivered(&mut self, now: SimTime, port: PortId, flow: FlowId, bytes: u64) {
        let b = self.bucket(now);
        bump(&mut self.port_delivered[port as usize], b, bytes);
        bump(&mut self.flow_delivered[flow as usize], b, bytes);
    }

    pub fn dropped(&mut self, now: SimTime, port: PortId, bytes: u64) {
        let b = self.bucket(now);
        bump(&mut self.port_dropped[port as usize], b, bytes);
    }

    pub fn queueing(&mut self, now: SimTime, port: PortId, delay_ns: u64) {
        let b = self.bucket(now);
        bump(&mut self.port_qdelay_sum[port as usize], b, delay_ns);
        bump(&mut self.port_qdelay_count[port as usize], b, 1);
    }

    pub fn rate(&mut self, time: SimTime, flow: FlowId, rate_bps: u64) {
        if let Some(r) = self.rates.as_mut() {
            r.push(RateSample { time, flow, rate_bps });
        }
    }

    pub fn rtt(&mut self, time: SimTime, flow: FlowId, rtt_ns: u64) {
        if let Some(r) = self.rtts.as_mut() {
            r.push(RttSample { time, flow, rtt_ns });
        }
    }

    /// Sum of `series` over buckets `[from, to)`.
    pub fn sum(series: &[u64], from: usize, to: usize) -> u64 {
        let to = to.min(series.len());
        if from >= to {
            return 0;
        }
        series[from..to].iter().sum()
    }
}
