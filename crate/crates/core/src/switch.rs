//! Switch egress port: tail-drop FIFO buffer with RED-style ECN marking.

use alloc::collections::VecDeque;

use rand::Rng;

use crate::error::SimError;
use crate::packet::{Packet, PacketKind, PortId, Telemetry};
use crate::units::{SimTime, Wire};

/// Linear marking ramp between `kmin_bytes` and `kmax_bytes`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct EcnParams {
    pub kmin_bytes: u64,
    pub kmax_bytes: u64,
    pub pmax: f64,
}

impl Default for EcnParams {
    fn default() -> Self {
        EcnParams {
            kmin_bytes: 100_000,
            kmax_bytes: 1_000_000,
            pmax: 0.8,
        }
    }
}

impl EcnParams {
    /// Marking probability at `occupancy` bytes.
    pub fn mark_probability(&self, occupancy: u64) -> f64 {
        if occupancy < self.kmin_bytes {
            0.0
        } else if occupancy > self.kmax_bytes {
            1.0
        } else if self.kmax_bytes == self.kmin_bytes {
            self.pmax
        } else {
            let span = (self.kmax_bytes - self.kmin_bytes) as f64;
            self.pmax * (occupancy - self.kmin_bytes) as f64 / span
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnqueueOutcome {
    Enqueued { marked: bool },
    Dropped,
}

#[derive(Debug, Clone)]
pub struct Departure {
    pub packet: Packet,
    pub depart_time: SimTime,
    /// Time the packet waited in the buffer before its first bit left.
    pub queueing_ns: u64,
}

#[derive(Debug, Clone)]
pub struct SwitchPort {
    pub id: PortId,
    pub capacity_bytes: u64,
    /// Bytes waiting in the buffer (the packet on the wire is not counted).
    occupancy_bytes: u64,
    pub ecn: EcnParams,
    pub telemetry: bool,
    pub drop_count: u64,
    pub tx_bytes: u64,
    pub marked_count: u64,
    wire: Wire,
    queue: VecDeque<Packet>,
    in_service: bool,
}

impl SwitchPort {
    pub fn new(id: PortId, capacity_bytes: u64, service_rate_bps: u64, ecn: EcnParams, telemetry: bool) -> Self {
        SwitchPort {
            id,
            capacity_bytes,
            occupancy_bytes: 0,
            ecn,
            telemetry,
            drop_count: 0,
            tx_bytes: 0,
            marked_count: 0,
            wire: Wire::new(service_rate_bps),
            queue: VecDeque::new(),
            in_service: false,
        }
    }

    pub fn occupancy_bytes(&self) -> u64 {
        self.occupancy_bytes
    }

    pub fn service_rate_bps(&self) -> u64 {
        self.wire.rate_bps()
    }

    pub fn queued_packets(&self) -> usize {
        self.queue.len()
    }

    /// Packets waiting in the buffer, head first.
    pub fn iter(&self) -> impl Iterator<Item = &Packet> {
        self.queue.iter()
    }

    /// Whether a packet is currently being serialized.
    pub fn is_busy(&self) -> bool {
        self.in_service
    }

    /// Admit `pkt` into the buffer, or drop it when it would not fit.
    /// Only data packets are eligible for ECN marking.
    pub fn enqueue<R: Rng + ?Sized>(&mut self, mut pkt: Packet, now: SimTime, rng: &mut R) -> (EnqueueOutcome, Option<Packet>) {
        let size = pkt.size_bytes as u64;
        if self.occupancy_bytes + size > self.capacity_bytes {
            self.drop_count += 1;
            return (EnqueueOutcome::Dropped, Some(pkt));
        }
        let mut marked = false;
        if pkt.kind == PacketKind::Data {
            let p = self.ecn.mark_probability(self.occupancy_bytes);
            if p >= 1.0 || (p > 0.0 && rng.gen::<f64>() < p) {
                marked = true;
                pkt.ecn_marked = true;
                self.marked_count += 1;
            }
        }
        pkt.enqueue_time = now;
        self.occupancy_bytes += size;
        debug_assert!(self.occupancy_bytes <= self.capacity_bytes);
        self.queue.push_back(pkt);
        (EnqueueOutcome::Enqueued { marked }, None)
    }

    /// Start serializing the head-of-line packet at `now`.
    pub fn dequeue(&mut self, now: SimTime) -> Result<Departure, SimError> {
        let mut packet = self.queue.pop_front().ok_or(SimError::DequeueEmpty(self.id))?;
        let size = packet.size_bytes as u64;
        self.occupancy_bytes -= size;
        self.tx_bytes += size;
        let (start, depart_time) = self.wire.transmit(now, size);
        debug_assert_eq!(start, now);
        if self.telemetry {
            packet.telemetry = Some(Telemetry {
                queue_bytes: self.occupancy_bytes,
                tx_bytes_cum: self.tx_bytes,
                port_rate_bps: self.wire.rate_bps(),
                ts: depart_time,
            });
        }
        self.in_service = true;
        Ok(Departure {
            queueing_ns: now.since(packet.enqueue_time),
            packet,
            depart_time,
        })
    }

    /// The packet on the wire has left; the port is free for the next one.
    pub fn finish_service(&mut self) {
        self.in_service = false;
    }
}
