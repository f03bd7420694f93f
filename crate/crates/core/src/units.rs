//! Integer time and exact wire-time arithmetic.
//!
//! The event loop never touches floating point: clocks are nanosecond
//! counters and every transmission time is derived from a running bit count
//! divided by an integer bits-per-second rate, so consecutive packets on a
//! busy wire do not accumulate rounding drift.

use core::fmt;
use core::ops::{Add, AddAssign, Sub};

pub const NANOS_PER_SEC: u64 = 1_000_000_000;

/// Simulation clock in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX >> 1);

    pub const fn from_nanos(ns: u64) -> Self {
        SimTime(ns)
    }

    pub const fn from_micros(us: u64) -> Self {
        SimTime(us * 1_000)
    }

    pub const fn from_millis(ms: u64) -> Self {
        SimTime(ms * 1_000_000)
    }

    pub const fn as_nanos(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 * 1e-9
    }

    pub fn as_micros_f64(self) -> f64 {
        self.0 as f64 * 1e-3
    }

    /// Nanoseconds elapsed since `earlier`, zero if `earlier` is in the future.
    pub fn since(self, earlier: SimTime) -> u64 {
        self.0.saturating_sub(earlier.0)
    }
}

impl Add<u64> for SimTime {
    type Output = SimTime;
    fn add(self, ns: u64) -> SimTime {
        SimTime(self.0 + ns)
    }
}

impl AddAssign<u64> for SimTime {
    fn add_assign(&mut self, ns: u64) {
        self.0 += ns;
    }
}

impl Sub for SimTime {
    type Output = u64;
    fn sub(self, rhs: SimTime) -> u64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ns", self.0)
    }
}

/// Nanoseconds needed to serialize `bits` at `rate_bps`, rounded up.
pub fn serialization_ns(bits: u128, rate_bps: u64) -> u64 {
    let rate = rate_bps as u128;
    ((bits * NANOS_PER_SEC as u128).div_ceil(rate)) as u64
}

/// Bytes a sender at `rate_bps` earns in `ns` nanoseconds, as a credit value
/// in units of bit-nanoseconds-per-second (`rate_bps * ns`). Divide by
/// [`CREDIT_PER_BYTE`] to get bytes.
pub fn credit_for(rate_bps: u64, ns: u64) -> u128 {
    rate_bps as u128 * ns as u128
}

/// Credit units in one byte.
pub const CREDIT_PER_BYTE: u128 = 8 * NANOS_PER_SEC as u128;

/// A point-to-point transmitter with exact back-to-back timing.
///
/// While the wire stays busy, departure times are computed from the bit count
/// accumulated since the busy period began, which keeps the long-run service
/// rate exactly `rate_bps`.
#[derive(Debug, Clone)]
pub struct Wire {
    rate_bps: u64,
    origin: SimTime,
    bits: u128,
    busy_until: SimTime,
}

impl Wire {
    pub fn new(rate_bps: u64) -> Self {
        assert!(rate_bps > 0, "wire rate must be positive");
        Wire {
            rate_bps,
            origin: SimTime::ZERO,
            bits: 0,
            busy_until: SimTime::ZERO,
        }
    }

    pub fn rate_bps(&self) -> u64 {
        self.rate_bps
    }

    pub fn busy_until(&self) -> SimTime {
        self.busy_until
    }

    pub fn is_idle(&self, now: SimTime) -> bool {
        now >= self.busy_until
    }

    /// Queue `bytes` behind whatever is already on the wire. Returns the
    /// (start, end) of this transmission.
    pub fn transmit(&mut self, now: SimTime, bytes: u64) -> (SimTime, SimTime) {
        if now > self.busy_until {
            // idle gap: restart the exact-timing origin
            self.origin = now;
            self.bits = 0;
        }
        let start = self.busy_until.max(now);
        self.bits += bytes as u128 * 8;
        let end = self.origin + serialization_ns(self.bits, self.rate_bps);
        self.busy_until = end;
        (start, end)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kilobyte_at_100g_is_80ns() {
        // 8 * 1000 bits / 100e9 bit/s = 80 ns
        assert_eq!(serialization_ns(8 * 1000, 100_000_000_000), 80);
    }

    #[test]
    fn probe_rounds_up() {
        // 512 bits / 100 Gbit/s = 5.12 ns
        assert_eq!(serialization_ns(512, 100_000_000_000), 6);
    }

    #[test]
    fn wire_has_no_drift_when_busy() {
        let mut w = Wire::new(100_000_000_000);
        let mut end = SimTime::ZERO;
        for _ in 0..1000 {
            end = w.transmit(SimTime::ZERO, 64).1;
        }
        // 1000 * 5.12 ns exactly
        assert_eq!(end, SimTime(5120));
    }

    #[test]
    fn wire_restarts_after_idle() {
        let mut w = Wire::new(100_000_000_000);
        assert_eq!(w.transmit(SimTime(0), 1000), (SimTime(0), SimTime(80)));
        assert_eq!(w.transmit(SimTime(50), 1000), (SimTime(80), SimTime(160)));
        assert_eq!(w.transmit(SimTime(500), 64), (SimTime(500), SimTime(506)));
    }

    #[test]
    fn back_to_back_at_boundary_keeps_origin() {
        let mut w = Wire::new(100_000_000_000);
        let mut t = SimTime::ZERO;
        for _ in 0..1000 {
            t = w.transmit(t, 64).1;
        }
        assert_eq!(t, SimTime(5120));
    }
}
