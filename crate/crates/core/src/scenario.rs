//! Benchmark topologies: many-to-one incast, all-to-all, and long-short.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::ConfigError;
use crate::flow::FlowSpec;
use crate::packet::FlowId;
use crate::topology::{NetworkConfig, Topology};
use crate::units::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ScenarioKind {
    ManyToOne,
    AllToAll,
    LongShort,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::ManyToOne => "many_to_one",
            ScenarioKind::AllToAll => "all_to_all",
            ScenarioKind::LongShort => "long_short",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct InterruptSpec {
    pub short_flow_count: u32,
    pub short_bytes: u64,
    /// Earliest short-flow start.
    pub start_time_ns: u64,
    /// Short flows start uniformly in `[start, start + window)`.
    pub window_ns: u64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ScenarioSpec {
    pub name: String,
    pub kind: ScenarioKind,
    pub total_flows: u32,
    pub hosts: u32,
    pub flows_per_host: u32,
    pub duration_ns: u64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub interrupt: Option<InterruptSpec>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub seed: u64,
    /// Long-lived flows start at independent uniform times in `[0, jitter)`.
    /// Identical flows started together stay burst-synchronized for good.
    #[cfg_attr(feature = "serde", serde(default = "default_jitter"))]
    pub start_jitter_ns: u64,
    /// Initial rate of every flow as a fraction of the link rate.
    #[cfg_attr(feature = "serde", serde(default = "one"))]
    pub initial_rate_fraction: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub net: NetworkConfig,
}

#[cfg(feature = "serde")]
fn default_jitter() -> u64 {
    DEFAULT_START_JITTER_NS
}

#[cfg(feature = "serde")]
fn one() -> f64 {
    1.0
}

/// Host/flow split for many-to-one runs of a given total flow count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingTable {
    pub rows: Vec<(u32, u32, u32)>,
}

impl Default for MappingTable {
    fn default() -> Self {
        MappingTable {
            rows: alloc::vec![
                (2, 2, 1),
                (4, 4, 1),
                (16, 16, 1),
                (32, 32, 1),
                (64, 64, 1),
                (128, 64, 2),
                (256, 32, 8),
                (512, 64, 8),
                (1024, 32, 32),
                (2048, 64, 32),
                (4096, 64, 64),
                (8192, 64, 128),
            ],
        }
    }
}

impl MappingTable {
    /// `(hosts, flows_per_host)` for `total` flows.
    pub fn lookup(&self, total: u32) -> Option<(u32, u32)> {
        self.rows.iter().find(|r| r.0 == total).map(|r| (r.1, r.2))
    }
}

pub const DEFAULT_START_JITTER_NS: u64 = 10_000;

impl ScenarioSpec {
    /// Incast of `total` flows, split across hosts per the mapping table, or
    /// one flow per host when the table has no row for `total`.
    pub fn many_to_one(total: u32, duration_ns: u64, seed: u64) -> Self {
        let (hosts, fph) = MappingTable::default().lookup(total).unwrap_or((total, 1));
        ScenarioSpec {
            name: format!("{total}to1"),
            kind: ScenarioKind::ManyToOne,
            total_flows: total,
            hosts,
            flows_per_host: fph,
            duration_ns,
            interrupt: None,
            seed,
            start_jitter_ns: DEFAULT_START_JITTER_NS,
            initial_rate_fraction: 1.0,
            net: NetworkConfig::default(),
        }
    }

    pub fn all_to_all(hosts: u32, duration_ns: u64, seed: u64) -> Self {
        ScenarioSpec {
            name: format!("a2a{hosts}"),
            kind: ScenarioKind::AllToAll,
            total_flows: hosts * hosts.saturating_sub(1),
            hosts,
            flows_per_host: hosts.saturating_sub(1),
            duration_ns,
            interrupt: None,
            seed,
            start_jitter_ns: DEFAULT_START_JITTER_NS,
            initial_rate_fraction: 1.0,
            net: NetworkConfig::default(),
        }
    }

    /// One long flow plus `total - 1` short interrupters. Short flows start
    /// between 10% and 25% of the run.
    pub fn long_short(total: u32, duration_ns: u64, seed: u64) -> Self {
        let shorts = total.saturating_sub(1);
        ScenarioSpec {
            name: format!("longshort{total}"),
            kind: ScenarioKind::LongShort,
            total_flows: total,
            hosts: total,
            flows_per_host: 1,
            duration_ns,
            interrupt: Some(InterruptSpec {
                short_flow_count: shorts,
                short_bytes: 1_000_000,
                start_time_ns: duration_ns / 10,
                window_ns: duration_ns * 15 / 100,
            }),
            seed,
            start_jitter_ns: DEFAULT_START_JITTER_NS,
            initial_rate_fraction: 1.0,
            net: NetworkConfig::default(),
        }
    }

    pub fn duration(&self) -> SimTime {
        SimTime(self.duration_ns)
    }

    fn initial_rate(&self) -> Result<u64, ConfigError> {
        let f = self.initial_rate_fraction;
        if !(f > 0.0 && f <= 1.0) {
            return Err(ConfigError::Scenario(format!("initial_rate_fraction {f} outside (0, 1]")));
        }
        Ok(((self.net.link_rate_bps as f64 * f) as u64).max(self.net.min_rate_bps()))
    }

    fn long_starts(&self, n: u32) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5743_4152_5453);
        (0..n)
            .map(|_| {
                if self.start_jitter_ns > 0 {
                    rng.gen_range(0..self.start_jitter_ns)
                } else {
                    0
                }
            })
            .collect()
    }

    /// Build the topology for this scenario.
    pub fn build(&self) -> Result<Topology, ConfigError> {
        if self.duration_ns == 0 {
            return Err(ConfigError::Scenario("duration must be positive".into()));
        }
        let topo = match self.kind {
            ScenarioKind::ManyToOne => build_many_to_one(self)?,
            ScenarioKind::AllToAll => build_all_to_all(self)?,
            ScenarioKind::LongShort => build_long_short(self)?,
        };
        topo.validate()?;
        Ok(topo)
    }

    /// Flows that live for the whole run; fairness is measured over these.
    pub fn long_lived_flows(&self) -> Vec<FlowId> {
        match self.kind {
            ScenarioKind::LongShort => alloc::vec![0],
            _ => (0..self.total_flows).collect(),
        }
    }
}

fn flow(id: FlowId, src: u32, dst: u32, port: u32, start: u64, size: Option<u64>, rate: u64) -> FlowSpec {
    FlowSpec {
        id,
        src_host: src,
        dst_host: dst,
        port,
        start_time: SimTime(start),
        size_bytes: size,
        initial_rate_bps: rate,
    }
}

pub fn build_many_to_one(spec: &ScenarioSpec) -> Result<Topology, ConfigError> {
    if spec.kind != ScenarioKind::ManyToOne {
        return Err(ConfigError::Scenario("not a many-to-one spec".into()));
    }
    if spec.total_flows == 0 || spec.hosts == 0 || spec.hosts * spec.flows_per_host != spec.total_flows {
        return Err(ConfigError::Scenario(format!(
            "{} hosts x {} flows/host does not give {} flows",
            spec.hosts, spec.flows_per_host, spec.total_flows
        )));
    }
    let rate = spec.initial_rate()?;
    let receiver = spec.hosts;
    let starts = spec.long_starts(spec.total_flows);
    let mut flows = Vec::with_capacity(spec.total_flows as usize);
    for h in 0..spec.hosts {
        for k in 0..spec.flows_per_host {
            let id = h * spec.flows_per_host + k;
            flows.push(flow(id, h, receiver, 0, starts[id as usize], None, rate));
        }
    }
    Ok(Topology {
        net: spec.net.clone(),
        hosts: spec.hosts + 1,
        port_dst: alloc::vec![receiver],
        flows,
    })
}

pub fn build_all_to_all(spec: &ScenarioSpec) -> Result<Topology, ConfigError> {
    if spec.kind != ScenarioKind::AllToAll {
        return Err(ConfigError::Scenario("not an all-to-all spec".into()));
    }
    let n = spec.hosts;
    if n < 2 {
        return Err(ConfigError::Scenario(format!("all-to-all needs at least 2 hosts, got {n}")));
    }
    let rate = spec.initial_rate()?;
    let starts = spec.long_starts(n * (n - 1));
    let mut flows = Vec::with_capacity((n * (n - 1)) as usize);
    for src in 0..n {
        for dst in 0..n {
            if src == dst {
                continue;
            }
            let id = flows.len() as FlowId;
            flows.push(flow(id, src, dst, dst, starts[id as usize], None, rate));
        }
    }
    Ok(Topology {
        net: spec.net.clone(),
        hosts: n,
        port_dst: (0..n).collect(),
        flows,
    })
}

pub fn build_long_short(spec: &ScenarioSpec) -> Result<Topology, ConfigError> {
    if spec.kind != ScenarioKind::LongShort {
        return Err(ConfigError::Scenario("not a long-short spec".into()));
    }
    let Some(int) = spec.interrupt.as_ref() else {
        return Err(ConfigError::Scenario("long-short needs an interrupt section".into()));
    };
    if int.short_flow_count == 0 {
        return Err(ConfigError::Scenario("long-short needs at least one short flow".into()));
    }
    if int.short_bytes == 0 {
        return Err(ConfigError::Scenario("short_bytes must be positive".into()));
    }
    let rate = spec.initial_rate()?;
    let shorts = int.short_flow_count;
    let receiver = shorts + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut flows = alloc::vec![flow(0, 0, receiver, 0, spec.long_starts(1)[0], None, rate)];
    for i in 0..shorts {
        let offset = if int.window_ns > 0 { rng.gen_range(0..int.window_ns) } else { 0 };
        let start = (int.start_time_ns + offset).max(1);
        flows.push(flow(i + 1, i + 1, receiver, 0, start, Some(int.short_bytes), rate));
    }
    Ok(Topology {
        net: spec.net.clone(),
        hosts: shorts + 2,
        port_dst: alloc::vec![receiver],
        flows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MS: u64 = 1_000_000;

    #[test]
    fn mapping_rows_are_consistent() {
        for &(t, h, f) in &MappingTable::default().rows {
            assert_eq!(h * f, t);
        }
    }

    #[test]
    fn mapping_table_rows() {
        let m = MappingTable::default();
        assert_eq!(m.lookup(1024), Some((32, 32)));
        assert_eq!(m.lookup(8192), Some((64, 128)));
        assert_eq!(m.lookup(2), Some((2, 1)));
        assert_eq!(m.lookup(8), None);
    }

    #[test]
    fn eight_to_one_uses_one_flow_per_host() {
        let s = ScenarioSpec::many_to_one(8, MS, 0);
        assert_eq!((s.hosts, s.flows_per_host), (8, 1));
        let t = s.build().unwrap();
        assert_eq!(t.flows.len(), 8);
        assert_eq!(t.ports(), 1);
    }

    #[test]
    fn bad_host_arithmetic_is_rejected() {
        let mut s = ScenarioSpec::many_to_one(4, MS, 0);
        s.flows_per_host = 3;
        assert!(matches!(s.build(), Err(ConfigError::Scenario(_))));
    }

    #[test]
    fn all_to_all_shapes() {
        let t = ScenarioSpec::all_to_all(4, MS, 0).build().unwrap();
        assert_eq!(t.flows.len(), 12);
        assert_eq!(t.ports(), 4);
        let t = ScenarioSpec::all_to_all(8, MS, 0).build().unwrap();
        assert_eq!((t.flows.len(), t.ports()), (56, 8));
        let t = ScenarioSpec::all_to_all(2, MS, 0).build().unwrap();
        assert_eq!(t.flows_on_port(0).count(), 1);
        assert_eq!(t.flows_on_port(1).count(), 1);
        assert!(ScenarioSpec::all_to_all(1, MS, 0).build().is_err());
    }

    #[test]
    fn long_short_shapes_and_determinism() {
        let t = ScenarioSpec::long_short(2, MS, 3).build().unwrap();
        assert_eq!(t.flows.len(), 2);
        assert_eq!(t.flows[0].size_bytes, None);
        assert_eq!(t.flows[1].size_bytes, Some(1_000_000));
        let a = ScenarioSpec::long_short(128, MS, 3).build().unwrap();
        assert_eq!(a.flows.iter().filter(|f| f.size_bytes.is_some()).count(), 127);
        let b = ScenarioSpec::long_short(128, MS, 3).build().unwrap();
        assert_eq!(a, b);
        for f in &a.flows[1..] {
            assert!(f.start_time.as_nanos() >= MS / 10 && f.start_time.as_nanos() < MS / 4);
        }
        let mut s = ScenarioSpec::long_short(2, MS, 3);
        s.interrupt.as_mut().unwrap().short_bytes = 0;
        assert!(s.build().is_err());
    }
}
