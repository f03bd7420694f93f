use crate::units::SimTime;

pub type FlowId = u32;
pub type HostId = u32;
pub type PortId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PacketKind {
    Data,
    RttProbe,
    Cnp,
    Nack,
}

impl PacketKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PacketKind::Data => "data",
            PacketKind::RttProbe => "probe",
            PacketKind::Cnp => "cnp",
            PacketKind::Nack => "nack",
        }
    }
}

/// In-band switch telemetry, stamped when a packet leaves a port.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Telemetry {
    /// Bytes still waiting in the port after this packet left the queue.
    pub queue_bytes: u64,
    /// Cumulative bytes the port has started transmitting, this packet included.
    pub tx_bytes_cum: u64,
    pub port_rate_bps: u64,
    pub ts: SimTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    /// Globally unique, assigned in creation order.
    pub id: u64,
    pub flow_id: FlowId,
    pub kind: PacketKind,
    pub size_bytes: u32,
    pub ecn_marked: bool,
    pub telemetry: Option<Telemetry>,
    /// For probes: the instant the probe started leaving the source NIC.
    pub send_time: SimTime,
    /// Arrival time at the switch port, set on enqueue.
    pub enqueue_time: SimTime,
}

impl Packet {
    pub fn new(id: u64, flow_id: FlowId, kind: PacketKind, size_bytes: u32, send_time: SimTime) -> Self {
        debug_assert!(size_bytes > 0);
        Packet {
            id,
            flow_id,
            kind,
            size_bytes,
            ecn_marked: false,
            telemetry: None,
            send_time,
            enqueue_time: send_time,
        }
    }

    pub fn bits(&self) -> u128 {
        self.size_bytes as u128 * 8
    }
}
