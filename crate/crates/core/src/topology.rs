//! Fabric parameters and the single-switch star topology every scenario uses.

use alloc::vec::Vec;

use crate::error::ConfigError;
use crate::flow::{BurstSizing, FlowSpec};
use crate::packet::{FlowId, HostId, PortId};
use crate::switch::EcnParams;
use crate::units::serialization_ns;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct NetworkConfig {
    pub link_rate_bps: u64,
    pub mtu_bytes: u32,
    pub probe_bytes: u32,
    pub max_burst_bytes: u32,
    /// Schedule a flow once it has earned this long's worth of data at its
    /// current rate rather than a full burst; `None` always waits for a full one.
    pub burst_interval_ns: Option<u64>,
    /// One-way propagation delay of a single hop.
    pub prop_delay_ns: u64,
    pub buffer_bytes: u64,
    pub ecn: EcnParams,
    /// Stamp in-band telemetry on departing packets.
    pub telemetry: bool,
    /// Floor on any controller rate; `link_rate_bps / 10_000` when unset.
    pub min_rate_bps: Option<u64>,
    /// Minimum spacing of CNPs generated by one receiver for one flow.
    pub cnp_interval_ns: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            link_rate_bps: 100_000_000_000,
            mtu_bytes: 1000,
            probe_bytes: 64,
            max_burst_bytes: 16_000,
            burst_interval_ns: Some(DEFAULT_BURST_INTERVAL_NS),
            prop_delay_ns: 1_000,
            buffer_bytes: 5_000_000,
            ecn: EcnParams::default(),
            telemetry: true,
            min_rate_bps: None,
            cnp_interval_ns: 50_000,
        }
    }
}

pub const DEFAULT_BURST_INTERVAL_NS: u64 = 32_000;

impl NetworkConfig {
    pub fn burst_sizing(&self) -> BurstSizing {
        BurstSizing {
            mtu_bytes: self.mtu_bytes,
            max_burst_bytes: self.max_burst_bytes,
            probe_bytes: self.probe_bytes,
            interval_ns: self.burst_interval_ns,
        }
    }

    pub fn min_rate_bps(&self) -> u64 {
        self.min_rate_bps.unwrap_or(self.link_rate_bps / 10_000).max(1)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |name| Err(ConfigError::InvalidParameter(name));
        if self.link_rate_bps == 0 {
            return bad("link_rate_bps");
        }
        if self.mtu_bytes == 0 {
            return bad("mtu_bytes");
        }
        if self.probe_bytes == 0 {
            return bad("probe_bytes");
        }
        if self.max_burst_bytes < self.mtu_bytes {
            return bad("max_burst_bytes");
        }
        if self.burst_interval_ns == Some(0) {
            return bad("burst_interval_ns");
        }
        if self.buffer_bytes < self.mtu_bytes as u64 {
            return bad("buffer_bytes");
        }
        if self.ecn.kmin_bytes > self.ecn.kmax_bytes || !(0.0..=1.0).contains(&self.ecn.pmax) {
            return bad("ecn");
        }
        if self.min_rate_bps() >= self.link_rate_bps {
            return bad("min_rate_bps");
        }
        Ok(())
    }
}

/// Hosts hang off one switch. Egress port `p` leads to host `port_dst[p]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub net: NetworkConfig,
    pub hosts: u32,
    pub port_dst: Vec<HostId>,
    pub flows: Vec<FlowSpec>,
}

impl Topology {
    pub fn ports(&self) -> u32 {
        self.port_dst.len() as u32
    }

    fn flow(&self, id: FlowId) -> Result<&FlowSpec, ConfigError> {
        self.flows.get(id as usize).ok_or(ConfigError::Unroutable {
            flow: id,
            reason: "unknown flow id",
        })
    }

    /// Check every flow has a path and sane parameters. Flow ids must equal
    /// their index.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.net.validate()?;
        for (i, f) in self.flows.iter().enumerate() {
            let unroutable = |reason| Err(ConfigError::Unroutable { flow: f.id, reason });
            if f.id as usize != i {
                return unroutable("flow ids must be dense and ordered");
            }
            if f.src_host >= self.hosts || f.dst_host >= self.hosts {
                return unroutable("host out of range");
            }
            if f.src_host == f.dst_host {
                return unroutable("source and destination coincide");
            }
            match self.port_dst.get(f.port as usize) {
                None => return unroutable("port out of range"),
                Some(&d) if d != f.dst_host => return unroutable("port does not lead to destination"),
                _ => {}
            }
            if f.initial_rate_bps == 0 || f.initial_rate_bps > self.net.link_rate_bps {
                return unroutable("initial rate outside (0, link rate]");
            }
            if f.size_bytes == Some(0) {
                return unroutable("finite flow with zero bytes");
            }
        }
        Ok(())
    }

    /// Empty-system round trip of a probe: NIC serialization, one hop to the
    /// switch, port serialization, one hop to the receiver, and the two-hop
    /// propagation-only return.
    pub fn base_rtt_ns(&self, flow: FlowId) -> Result<u64, ConfigError> {
        let f = self.flow(flow)?;
        if self.port_dst.get(f.port as usize) != Some(&f.dst_host) {
            return Err(ConfigError::Unroutable {
                flow,
                reason: "port does not lead to destination",
            });
        }
        let net = &self.net;
        let probe_bits = net.probe_bytes as u128 * 8;
        let ser = serialization_ns(probe_bits, net.link_rate_bps);
        Ok(ser + net.prop_delay_ns + ser + net.prop_delay_ns + 2 * net.prop_delay_ns)
    }

    pub fn flows_on_port(&self, port: PortId) -> impl Iterator<Item = &FlowSpec> {
        self.flows.iter().filter(move |f| f.port == port)
    }
}
