//! Timestamped events with a deterministic total order.

use alloc::collections::BinaryHeap;
use core::cmp::Ordering;

use crate::error::SimError;
use crate::packet::{FlowId, HostId, Packet, PortId};
use crate::units::SimTime;

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    /// A host scheduler wakes up to pick the next flow.
    FlowScheduled {
        host: HostId,
    },
    PacketArriveSwitch {
        port: PortId,
        packet: Packet,
    },
    /// `packet` finished serializing out of `port`.
    PacketDepartSwitch {
        port: PortId,
        packet: Packet,
    },
    /// Any packet reaching a host: data at a receiver, CNP/NACK at a source.
    PacketArriveDest {
        host: HostId,
        packet: Packet,
    },
    ProbeReturn {
        flow: FlowId,
        packet: Packet,
    },
    TimerFire {
        flow: FlowId,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::FlowScheduled { .. } => "sched",
            EventKind::PacketArriveSwitch { .. } => "arrive_switch",
            EventKind::PacketDepartSwitch { .. } => "depart_switch",
            EventKind::PacketArriveDest { .. } => "arrive_dest",
            EventKind::ProbeReturn { .. } => "probe_return",
            EventKind::TimerFire { .. } => "timer",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimEvent {
    pub time: SimTime,
    pub seq: u64,
    pub kind: EventKind,
}

impl PartialEq for SimEvent {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}

impl Eq for SimEvent {}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SimEvent {
    // reversed so the max-heap pops the earliest (time, seq)
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

/// Min-queue of events keyed by `(time, seq)`; `seq` follows insertion order.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<SimEvent>,
    next_seq: u64,
    now: SimTime,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Schedule `kind` at `time`. Scheduling into the past is a bug in the
    /// caller and is refused.
    pub fn push(&mut self, time: SimTime, kind: EventKind) -> Result<u64, SimError> {
        if time < self.now {
            return Err(SimError::EventInPast { at: time, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(SimEvent { time, seq, kind });
        Ok(seq)
    }

    /// Pending events in no particular order.
    pub fn iter(&self) -> impl Iterator<Item = &SimEvent> {
        self.heap.iter()
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|e| e.time)
    }

    /// Pop the earliest event and advance the clock to it. `None` means the
    /// simulation has nothing left to do.
    pub fn pop(&mut self) -> Option<SimEvent> {
        let ev = self.heap.pop()?;
        self.now = ev.time;
        Some(ev)
    }
}
