//! The event loop tying hosts, the switch and rate controllers together.

use alloc::vec::Vec;
use core::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cc::{CcEvent, CcEventKind, FlowView, RateClamp, RateController};
use crate::error::{ConfigError, SimError};
use crate::event::{EventKind, EventQueue};
use crate::flow::FlowState;
use crate::host::{schedule_burst, HostSched};
use crate::packet::{FlowId, HostId, Packet, PacketKind, PortId};
use crate::recorder::Recorder;
use crate::switch::{EnqueueOutcome, SwitchPort};
use crate::topology::Topology;
use crate::units::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    pub seed: u64,
    /// Keep a per-event trace.
    pub trace: bool,
    /// Keep per-probe rate and RTT samples.
    pub samples: bool,
    pub bucket_ns: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            seed: 0,
            trace: false,
            samples: false,
            bucket_ns: 10_000,
        }
    }
}

/// One line of the event trace: `time_ns kind flow_id port occupancy`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRecord {
    pub time: SimTime,
    pub seq: u64,
    pub kind: &'static str,
    pub flow: Option<FlowId>,
    pub port: Option<PortId>,
    pub occupancy: u64,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} ", self.time.as_nanos(), self.kind)?;
        match self.flow {
            Some(id) => write!(f, "{id} ")?,
            None => f.write_str("- ")?,
        }
        match self.port {
            Some(p) => write!(f, "{p} ")?,
            None => f.write_str("- ")?,
        }
        write!(f, "{}", self.occupancy)
    }
}

pub struct Simulation {
    pub topo: Topology,
    queue: EventQueue,
    pub flows: Vec<FlowState>,
    pub hosts: Vec<HostSched>,
    pub ports: Vec<SwitchPort>,
    rng: ChaCha8Rng,
    next_packet_id: u64,
    clamp: RateClamp,
    started: Vec<bool>,
    last_cnp: Vec<Option<SimTime>>,
    pub recorder: Recorder,
    trace: Option<Vec<TraceRecord>>,
    events: u64,
}

impl Simulation {
    pub fn new(topo: Topology, opts: SimOptions) -> Result<Self, ConfigError> {
        topo.validate()?;
        let net = topo.net.clone();
        let mut hosts: Vec<HostSched> = (0..topo.hosts).map(|h| HostSched::new(h, net.link_rate_bps, net.burst_sizing())).collect();
        let ports = topo
            .port_dst
            .iter()
            .enumerate()
            .map(|(p, _)| SwitchPort::new(p as PortId, net.buffer_bytes, net.link_rate_bps, net.ecn, net.telemetry))
            .collect();
        let mut flows = Vec::with_capacity(topo.flows.len());
        let mut queue = EventQueue::new();
        for spec in &topo.flows {
            flows.push(FlowState::new(spec, topo.base_rtt_ns(spec.id)?));
            hosts[spec.src_host as usize].flow_ids.push(spec.id);
            queue
                .push(spec.start_time, EventKind::FlowScheduled { host: spec.src_host })
                .expect("clock starts at zero");
        }
        let n = topo.flows.len();
        Ok(Simulation {
            recorder: Recorder::new(opts.bucket_ns, topo.port_dst.len(), n, opts.samples),
            clamp: RateClamp::new(net.min_rate_bps(), net.link_rate_bps),
            topo,
            queue,
            flows,
            hosts,
            ports,
            rng: ChaCha8Rng::seed_from_u64(opts.seed),
            next_packet_id: 0,
            started: alloc::vec![false; n],
            last_cnp: alloc::vec![None; n],
            trace: opts.trace.then(Vec::new),
            events: 0,
        })
    }

    pub fn now(&self) -> SimTime {
        self.queue.now()
    }

    pub fn events_processed(&self) -> u64 {
        self.events
    }

    pub fn clamp(&self) -> RateClamp {
        self.clamp
    }

    pub fn trace(&self) -> Option<&[TraceRecord]> {
        self.trace.as_deref()
    }

    pub fn take_trace(&mut self) -> Option<Vec<TraceRecord>> {
        self.trace.as_mut().map(core::mem::take)
    }

    pub fn pending_events(&self) -> usize {
        self.queue.len()
    }

    pub fn view(&self, flow: FlowId) -> FlowView {
        let f = &self.flows[flow as usize];
        FlowView {
            flow_id: flow,
            rate_bps: f.rate_bps(),
            base_rtt_ns: f.base_rtt_ns,
            link_rate_bps: self.topo.net.link_rate_bps,
            min_rate_bps: self.clamp.min_bps,
            cnp_count: f.cnp_count,
            nack_count: f.nack_count,
        }
    }

    /// Data bytes of `flow` currently inside the network: on a wire, in a
    /// switch buffer, or being serialized by a port.
    pub fn data_bytes_in_network(&self, flow: FlowId) -> u64 {
        let data = |p: &Packet| p.kind == PacketKind::Data && p.flow_id == flow;
        let mut total = 0u64;
        for ev in self.queue.iter() {
            match &ev.kind {
                EventKind::PacketArriveSwitch { packet, .. } | EventKind::PacketDepartSwitch { packet, .. } | EventKind::PacketArriveDest { packet, .. }
                    if data(packet) =>
                {
                    total += packet.size_bytes as u64
                }
                _ => {}
            }
        }
        for port in &self.ports {
            total += port.iter().filter(|p| data(p)).map(|p| p.size_bytes as u64).sum::<u64>();
        }
        total
    }

    /// Process every event up to and including `until`.
    pub fn run_until<C: RateController + ?Sized>(&mut self, until: SimTime, ctrl: &mut C) -> Result<(), SimError> {
        while let Some(t) = self.queue.peek_time() {
            if t > until {
                break;
            }
            self.step(ctrl)?;
        }
        Ok(())
    }

    /// Process the next event. Returns `false` once nothing is left to do.
    pub fn step<C: RateController + ?Sized>(&mut self, ctrl: &mut C) -> Result<bool, SimError> {
        let Some(ev) = self.queue.pop() else {
            return Ok(false);
        };
        self.events += 1;
        let now = ev.time;
        let name = ev.kind.name();
        let (flow, port) = match ev.kind {
            EventKind::FlowScheduled { host } => (self.on_schedule(host, ctrl)?, None),
            EventKind::PacketArriveSwitch { port, packet } => {
                let f = packet.flow_id;
                self.on_arrive_switch(port, packet)?;
                (Some(f), Some(port))
            }
            EventKind::PacketDepartSwitch { port, packet } => {
                let f = packet.flow_id;
                self.on_depart_switch(port, packet)?;
                (Some(f), Some(port))
            }
            EventKind::PacketArriveDest { host, packet } => {
                let f = packet.flow_id;
                self.deliver(host, packet, ctrl)?;
                (Some(f), None)
            }
            EventKind::ProbeReturn { flow, packet } => {
                self.on_probe_return(flow, packet, ctrl)?;
                (Some(flow), None)
            }
            EventKind::TimerFire { flow } => {
                if self.flows[flow as usize].active {
                    self.dispatch(flow, CcEventKind::TimerFired, ctrl)?;
                    if let Some(iv) = ctrl.timer_interval_ns() {
                        self.queue.push(now + iv.max(1), EventKind::TimerFire { flow })?;
                    }
                }
                (Some(flow), None)
            }
        };
        if let Some(trace) = self.trace.as_mut() {
            let occupancy = port.map_or(0, |p| self.ports[p as usize].occupancy_bytes());
            trace.push(TraceRecord {
                time: now,
                seq: ev.seq,
                kind: name,
                flow,
                port,
                occupancy,
            });
        }
        Ok(true)
    }

    fn new_packet(&mut self, flow: FlowId, kind: PacketKind, size: u32, at: SimTime) -> Packet {
        let id = self.next_packet_id;
        self.next_packet_id += 1;
        Packet::new(id, flow, kind, size, at)
    }

    fn start_flow<C: RateController + ?Sized>(&mut self, flow: FlowId, ctrl: &mut C) -> Result<(), SimError> {
        let now = self.now();
        let net = &self.topo.net;
        let sz = net.burst_sizing();
        self.started[flow as usize] = true;
        let f = &mut self.flows[flow as usize];
        f.active = true;
        let view = self.view(flow);
        if let Some(req) = ctrl.on_flow_start(&view, now) {
            let rate = self.clamp.apply(req).new_rate_bps;
            self.flows[flow as usize].set_rate(now, rate, &sz);
        }
        let f = &mut self.flows[flow as usize];
        let seed = f.credit_threshold(&sz);
        f.set_credit(seed, now);
        let rate = f.rate_bps();
        self.recorder.rate(now, flow, rate);
        if let Some(iv) = ctrl.timer_interval_ns() {
            self.queue.push(now + iv.max(1), EventKind::TimerFire { flow })?;
        }
        Ok(())
    }

    fn reschedule_host(&mut self, host: HostId) -> Result<(), SimError> {
        let now = self.now();
        let h = &self.hosts[host as usize];
        let next = h.next_wake(now, &self.flows);
        if next != h.wake_at {
            if let Some(t) = next {
                self.queue.push(t, EventKind::FlowScheduled { host })?;
            }
            self.hosts[host as usize].wake_at = next;
        }
        Ok(())
    }

    fn on_schedule<C: RateController + ?Sized>(&mut self, host: HostId, ctrl: &mut C) -> Result<Option<FlowId>, SimError> {
        let now = self.now();
        let mut started_any = false;
        for i in 0..self.hosts[host as usize].flow_ids.len() {
            let fid = self.hosts[host as usize].flow_ids[i];
            if !self.started[fid as usize] && self.flows[fid as usize].start_time <= now {
                self.start_flow(fid, ctrl)?;
                started_any = true;
            }
        }
        if !started_any && self.hosts[host as usize].wake_at != Some(now) {
            return Ok(None);
        }
        self.hosts[host as usize].wake_at = None;
        let net = self.topo.net.clone();
        let mut picked = None;
        if self.hosts[host as usize].wire.is_idle(now) {
            if let Some(fid) = self.hosts[host as usize].pick(now, &mut self.flows) {
                picked = Some(fid);
                let burst = schedule_burst(&mut self.flows[fid as usize], now, &net.burst_sizing());
                let port = self.flows[fid as usize].port;
                let sizes = burst.data_sizes.iter().map(|&s| (PacketKind::Data, s));
                let probe = burst.probe_bytes.map(|s| (PacketKind::RttProbe, s));
                for (kind, size) in sizes.chain(probe) {
                    let (start, end) = self.hosts[host as usize].wire.transmit(now, size as u64);
                    let packet = self.new_packet(fid, kind, size, start);
                    self.queue.push(end + net.prop_delay_ns, EventKind::PacketArriveSwitch { port, packet })?;
                }
            }
        }
        self.reschedule_host(host)?;
        Ok(picked)
    }

    fn start_service(&mut self, port: PortId) -> Result<(), SimError> {
        let now = self.now();
        let dep = self.ports[port as usize].dequeue(now)?;
        self.recorder.queueing(now, port, dep.queueing_ns);
        self.queue.push(dep.depart_time, EventKind::PacketDepartSwitch { port, packet: dep.packet })?;
        Ok(())
    }

    fn on_arrive_switch(&mut self, port: PortId, packet: Packet) -> Result<(), SimError> {
        let now = self.now();
        let p = &mut self.ports[port as usize];
        let (outcome, rejected) = p.enqueue(packet, now, &mut self.rng);
        debug_assert!(p.occupancy_bytes() <= p.capacity_bytes);
        match outcome {
            EnqueueOutcome::Dropped => {
                let pkt = rejected.expect("a dropped packet is handed back");
                let size = pkt.size_bytes as u64;
                self.recorder.dropped(now, port, size);
                let f = &mut self.flows[pkt.flow_id as usize];
                let src = f.src_host;
                if pkt.kind == PacketKind::Data {
                    f.on_drop(size);
                }
                let nack = self.new_packet(pkt.flow_id, PacketKind::Nack, self.topo.net.probe_bytes, now);
                self.queue
                    .push(now + self.topo.net.prop_delay_ns, EventKind::PacketArriveDest { host: src, packet: nack })?;
                if pkt.kind == PacketKind::Data {
                    self.reschedule_host(src)?;
                }
            }
            EnqueueOutcome::Enqueued { .. } => {
                if !self.ports[port as usize].is_busy() {
                    self.start_service(port)?;
                }
            }
        }
        Ok(())
    }

    fn on_depart_switch(&mut self, port: PortId, packet: Packet) -> Result<(), SimError> {
        let now = self.now();
        self.ports[port as usize].finish_service();
        let host = self.topo.port_dst[port as usize];
        self.queue
            .push(now + self.topo.net.prop_delay_ns, EventKind::PacketArriveDest { host, packet })?;
        if self.ports[port as usize].queued_packets() > 0 {
            self.start_service(port)?;
        }
        Ok(())
    }

    /// A packet reaches a host: data and probes at the receiver, CNPs and
    /// NACKs back at the source.
    pub fn deliver<C: RateController + ?Sized>(&mut self, host: HostId, packet: Packet, ctrl: &mut C) -> Result<(), SimError> {
        let now = self.now();
        let fid = packet.flow_id;
        let prop = self.topo.net.prop_delay_ns;
        match packet.kind {
            PacketKind::Data => {
                debug_assert_eq!(host, self.flows[fid as usize].dst_host);
                let size = packet.size_bytes as u64;
                let f = &mut self.flows[fid as usize];
                f.on_delivered(size, now);
                if f.finish_time.is_some() {
                    f.active = false;
                }
                let (port, src) = (f.port, f.src_host);
                self.recorder.delivered(now, port, fid, size);
                if packet.ecn_marked {
                    let last = &mut self.last_cnp[fid as usize];
                    if last.is_none_or(|t| now.since(t) >= self.topo.net.cnp_interval_ns) {
                        *last = Some(now);
                        let cnp = self.new_packet(fid, PacketKind::Cnp, self.topo.net.probe_bytes, now);
                        self.queue.push(now + 2 * prop, EventKind::PacketArriveDest { host: src, packet: cnp })?;
                    }
                }
            }
            PacketKind::RttProbe => {
                self.queue.push(now + 2 * prop, EventKind::ProbeReturn { flow: fid, packet })?;
            }
            PacketKind::Cnp => {
                let f = &mut self.flows[fid as usize];
                if f.active {
                    f.cnp_count += 1;
                    self.dispatch(fid, CcEventKind::CnpReceived, ctrl)?;
                }
            }
            PacketKind::Nack => {
                let f = &mut self.flows[fid as usize];
                if f.active {
                    f.nack_count += 1;
                    self.dispatch(fid, CcEventKind::NackReceived, ctrl)?;
                }
            }
        }
        Ok(())
    }

    fn on_probe_return<C: RateController + ?Sized>(&mut self, flow: FlowId, packet: Packet, ctrl: &mut C) -> Result<(), SimError> {
        let now = self.now();
        let rtt_ns = now.since(packet.send_time);
        self.flows[flow as usize].last_rtt_ns = Some(rtt_ns);
        self.recorder.rtt(now, flow, rtt_ns);
        if !self.flows[flow as usize].active {
            return Ok(());
        }
        let kind = CcEventKind::ProbeReturned {
            rtt_ns,
            telemetry: packet.telemetry,
        };
        self.dispatch(flow, kind, ctrl)?;
        let f = &mut self.flows[flow as usize];
        f.cnp_count = 0;
        f.nack_count = 0;
        f.decisions += 1;
        let rate = f.rate_bps();
        self.recorder.rate(now, flow, rate);
        Ok(())
    }

    fn dispatch<C: RateController + ?Sized>(&mut self, flow: FlowId, kind: CcEventKind, ctrl: &mut C) -> Result<(), SimError> {
        let now = self.now();
        let view = self.view(flow);
        let ev = CcEvent { kind, now, flow_id: flow };
        if let Some(req) = ctrl.on_event(&view, &ev) {
            self.set_rate(flow, req)?;
        }
        Ok(())
    }

    /// Apply a requested rate through the clamp.
    pub fn set_rate(&mut self, flow: FlowId, requested_bps: f64) -> Result<(), SimError> {
        let now = self.now();
        let rate = self.clamp.apply(requested_bps).new_rate_bps;
        let net = &self.topo.net;
        let sz = net.burst_sizing();
        let f = &mut self.flows[flow as usize];
        if rate != f.rate_bps() {
            f.set_rate(now, rate, &sz);
            let src = f.src_host;
            self.reschedule_host(src)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cc::FixedRate;
    use crate::flow::FlowSpec;
    use crate::topology::NetworkConfig;

    const LINK: u64 = 100_000_000_000;

    fn incast(n: u32, rate: u64) -> Topology {
        Topology {
            net: NetworkConfig::default(),
            hosts: n + 1,
            port_dst: alloc::vec![n],
            flows: (0..n)
                .map(|i| FlowSpec {
                    id: i,
                    src_host: i,
                    dst_host: n,
                    port: 0,
                    start_time: SimTime::ZERO,
                    size_bytes: None,
                    initial_rate_bps: rate,
                })
                .collect(),
        }
    }

    struct Idle;
    impl RateController for Idle {
        fn on_event(&mut self, _: &FlowView, _: &CcEvent) -> Option<f64> {
            None
        }
    }

    #[test]
    fn idle_probe_rtt_matches_base_rtt() {
        let topo = incast(1, LINK / 10);
        let base = topo.base_rtt_ns(0).unwrap();
        let mut sim = Simulation::new(
            topo,
            SimOptions {
                samples: true,
                ..Default::default()
            },
        )
        .unwrap();
        sim.run_until(SimTime::from_micros(200), &mut Idle).unwrap();
        let rtts = sim.recorder.rtts.as_ref().unwrap();
        assert!(!rtts.is_empty());
        // the probe may trail the last data packet of its own burst through
        // the port by less than one MTU serialization time
        let quantum = crate::units::serialization_ns(8 * 1000, LINK);
        for s in rtts {
            assert!(s.rtt_ns >= base - 1 && s.rtt_ns <= base + quantum, "rtt {} base {}", s.rtt_ns, base);
        }
    }

    #[test]
    fn single_flow_fills_the_link() {
        let mut sim = Simulation::new(incast(1, LINK), SimOptions::default()).unwrap();
        sim.run_until(SimTime::from_micros(1000), &mut Idle).unwrap();
        let delivered = Recorder::sum(&sim.recorder.port_delivered[0], 10, 100);
        // 900 us at 12.5 GB/s, minus probe overhead of 64 B per 16 KB
        let ideal = 12.5e9 * 900e-6;
        let frac = delivered as f64 / ideal;
        assert!(frac > 0.99 && frac <= 1.0, "{frac}");
        assert_eq!(sim.ports[0].drop_count, 0);
    }

    #[test]
    fn fixed_rate_pair_shares_fairly() {
        let mut sim = Simulation::new(incast(2, LINK), SimOptions::default()).unwrap();
        sim.run_until(SimTime::from_micros(2000), &mut FixedRate { rate_bps: LINK / 2 }).unwrap();
        let a = Recorder::sum(&sim.recorder.flow_delivered[0], 50, 200) as f64;
        let b = Recorder::sum(&sim.recorder.flow_delivered[1], 50, 200) as f64;
        assert!((a / b - 1.0).abs() < 0.01);
        assert_eq!(sim.ports[0].drop_count, 0);
    }

    #[test]
    fn overload_drops_and_conserves_bytes() {
        let mut topo = incast(4, LINK);
        topo.net = NetworkConfig {
            buffer_bytes: 50_000,
            ..NetworkConfig::default()
        };
        let mut sim = Simulation::new(topo, SimOptions::default()).unwrap();
        sim.run_until(SimTime::from_micros(300), &mut Idle).unwrap();
        assert!(sim.ports[0].drop_count > 0);
        for f in 0..4 {
            let st = &sim.flows[f as usize];
            assert_eq!(st.bytes_sent, st.bytes_delivered + st.bytes_dropped + sim.data_bytes_in_network(f));
        }
    }

    #[test]
    fn same_seed_same_trace() {
        let run = |seed| {
            let mut sim = Simulation::new(
                incast(3, LINK),
                SimOptions {
                    seed,
                    trace: true,
                    ..Default::default()
                },
            )
            .unwrap();
            sim.run_until(SimTime::from_micros(100), &mut Idle).unwrap();
            sim.take_trace().unwrap()
        };
        assert_eq!(run(7), run(7));
    }
}
