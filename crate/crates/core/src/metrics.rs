//! Steady-state run metrics, recovery time and Pareto comparison.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::MetricsError;
use crate::packet::{FlowId, PortId};
use crate::recorder::{RateSample, Recorder};
use crate::scenario::ScenarioSpec;
use crate::sim::Simulation;
use crate::units::SimTime;

/// Fraction of the run dropped before measuring.
pub const WARMUP_FRACTION: f64 = 0.2;
/// A run fails when drops show up in more than this fraction of buckets.
pub const FAIL_BUCKET_FRACTION: f64 = 0.1;
/// Rate fraction the long flow must get back to after an interruption.
pub const RECOVERY_RATE_FRACTION: f64 = 0.95;
pub const RECOVERY_HOLD_SAMPLES: usize = 10;
pub const RECOVERY_SMOOTHING: usize = 4;
/// Metrics closer than this count as equal when comparing runs.
pub const SIMILARITY_BAND: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricsWindow {
    pub from: SimTime,
    pub to: SimTime,
}

impl MetricsWindow {
    /// Everything after the first `warmup` fraction of `duration`.
    pub fn steady(duration: SimTime, warmup: f64) -> Self {
        let from = (duration.as_nanos() as f64 * warmup.clamp(0.0, 1.0)) as u64;
        MetricsWindow {
            from: SimTime(from),
            to: duration,
        }
    }

    /// The last `fraction` of `duration`.
    pub fn tail(duration: SimTime, fraction: f64) -> Self {
        Self::steady(duration, 1.0 - fraction)
    }

    fn buckets(&self, bucket_ns: u64) -> Result<(usize, usize), MetricsError> {
        let a = self.from.as_nanos().div_ceil(bucket_ns) as usize;
        let b = (self.to.as_nanos() / bucket_ns) as usize;
        if b <= a {
            return Err(MetricsError::EmptyWindow);
        }
        Ok((a, b))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub scenario: String,
    pub su_percent: f64,
    pub fr: f64,
    pub ql_us: f64,
    pub dr_gbps: f64,
    /// Long-short runs only; `Some(f64::INFINITY)` when the long flow never recovers.
    pub recovery_time_s: Option<f64>,
    pub long_bw_percent: Option<f64>,
    pub failed: bool,
}

/// `100 * min / max`; 100 for an empty or all-zero set.
pub fn fairness(rates: &[f64]) -> f64 {
    let max = rates.iter().copied().fold(0.0f64, f64::max);
    if max <= 0.0 {
        return 100.0;
    }
    let min = rates.iter().copied().fold(f64::INFINITY, f64::min);
    100.0 * min / max
}

/// Mean delivered rate of each flow over the window, in bit/s.
pub fn flow_throughputs(rec: &Recorder, flows: &[FlowId], window: MetricsWindow) -> Result<Vec<f64>, MetricsError> {
    let (a, b) = window.buckets(rec.bucket_ns)?;
    let secs = ((b - a) as u64 * rec.bucket_ns) as f64 * 1e-9;
    Ok(flows
        .iter()
        .map(|&f| Recorder::sum(&rec.flow_delivered[f as usize], a, b) as f64 * 8.0 / secs)
        .collect())
}

/// Ports that carry at least one long-lived flow, with those flows.
fn bottlenecks(sim: &Simulation, long: &[FlowId]) -> Vec<(PortId, Vec<FlowId>)> {
    let mut out: Vec<(PortId, Vec<FlowId>)> = Vec::new();
    for &f in long {
        let p = sim.topo.flows[f as usize].port;
        match out.iter_mut().find(|(q, _)| *q == p) {
            Some((_, v)) => v.push(f),
            None => out.push((p, alloc::vec![f])),
        }
    }
    out.sort_by_key(|(p, _)| *p);
    out
}

/// SU, FR, QL and DR at the bottleneck ports over `window`. FR is taken per
/// port over the long-lived flows crossing it and averaged across ports.
pub fn compute_metrics(sim: &Simulation, spec: &ScenarioSpec, window: MetricsWindow) -> Result<MetricsReport, MetricsError> {
    let rec = &sim.recorder;
    let (a, b) = window.buckets(rec.bucket_ns)?;
    let span_ns = ((b - a) as u64 * rec.bucket_ns) as f64;
    let link = sim.topo.net.link_rate_bps as f64;
    let long = spec.long_lived_flows();
    let ports = bottlenecks(sim, &long);
    if ports.is_empty() {
        return Err(MetricsError::EmptyWindow);
    }

    let mut delivered = 0u64;
    let mut dropped = 0u64;
    let mut qsum = 0u64;
    let mut qcount = 0u64;
    let mut fr = 0.0;
    for (p, flows) in &ports {
        let p = *p as usize;
        delivered += Recorder::sum(&rec.port_delivered[p], a, b);
        dropped += Recorder::sum(&rec.port_dropped[p], a, b);
        qsum += Recorder::sum(&rec.port_qdelay_sum[p], a, b);
        qcount += Recorder::sum(&rec.port_qdelay_count[p], a, b);
        fr += fairness(&flow_throughputs(rec, flows, window)?);
    }
    let n = ports.len() as f64;
    let su = (delivered as f64 * 8.0 * 1e9 / (link * span_ns * n) * 100.0).min(100.0);

    let drop_buckets = (a..b)
        .filter(|&k| ports.iter().any(|(p, _)| rec.port_dropped[*p as usize].get(k).copied().unwrap_or(0) > 0))
        .count();
    let mut failed = drop_buckets as f64 > FAIL_BUCKET_FRACTION * (b - a) as f64;

    let (mut recovery_time_s, mut long_bw_percent) = (None, None);
    if spec.interrupt.is_some() {
        if let Some(&lf) = long.first() {
            let shorts: Vec<(SimTime, Option<SimTime>)> = sim
                .flows
                .iter()
                .enumerate()
                .filter(|(i, _)| !long.contains(&(*i as FlowId)))
                .map(|(_, f)| (f.start_time, f.finish_time))
                .collect();
            let samples = rec.rates.as_deref().unwrap_or(&[]);
            let rt = recovery_time(samples, lf, &shorts, link)?;
            if rt.is_none() {
                failed = true;
            }
            recovery_time_s = Some(rt.map_or(f64::INFINITY, |ns| ns as f64 * 1e-9));
            long_bw_percent = Some(flow_throughputs(rec, &[lf], window)?[0] / link * 100.0);
        }
    }

    Ok(MetricsReport {
        scenario: spec.name.clone(),
        su_percent: su,
        fr: fr / n,
        ql_us: if qcount == 0 { 0.0 } else { qsum as f64 / qcount as f64 / 1000.0 },
        dr_gbps: dropped as f64 * 8.0 / span_ns,
        recovery_time_s,
        long_bw_percent,
        failed,
    })
}

/// Nanoseconds from the first short-flow start until the long flow's
/// smoothed rate holds at or above 95% of `link_bps` for 10 consecutive
/// decisions, searching from the moment the last short flow finished.
/// `Ok(None)` when that never happens, or a short flow never finishes.
pub fn recovery_time(samples: &[RateSample], long_flow: FlowId, shorts: &[(SimTime, Option<SimTime>)], link_bps: f64) -> Result<Option<u64>, MetricsError> {
    let Some(first) = shorts.iter().map(|s| s.0).min() else {
        return Ok(Some(0));
    };
    let mut last_end = first;
    for s in shorts {
        match s.1 {
            Some(e) => last_end = last_end.max(e),
            None => return Ok(None),
        }
    }
    let rates: Vec<(SimTime, f64)> = samples.iter().filter(|s| s.flow == long_flow).map(|s| (s.time, s.rate_bps as f64)).collect();
    if rates.is_empty() {
        return Err(MetricsError::EmptyWindow);
    }
    let threshold = RECOVERY_RATE_FRACTION * link_bps;
    let mut run = 0;
    for i in 0..rates.len() {
        let lo = (i + 1).saturating_sub(RECOVERY_SMOOTHING);
        let smooth = rates[lo..=i].iter().map(|r| r.1).sum::<f64>() / (i + 1 - lo) as f64;
        if rates[i].0 < last_end {
            continue;
        }
        if smooth >= threshold {
            run += 1;
            if run == RECOVERY_HOLD_SAMPLES {
                return Ok(Some(rates[i].0.since(first)));
            }
        } else {
            run = 0;
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominance {
    ADominatesB,
    BDominatesA,
    Incomparable,
}

/// Signed advantage of `a` over `b` per metric, higher is better for `a`.
fn advantages(a: &MetricsReport, b: &MetricsReport) -> [f64; 4] {
    [a.su_percent - b.su_percent, a.fr - b.fr, b.ql_us - a.ql_us, b.dr_gbps - a.dr_gbps]
}

/// `a` dominates `b` when it is within the similarity band or better on
/// every metric and better by more than the band on at least one.
pub fn pareto_compare(a: &MetricsReport, b: &MetricsReport) -> Result<Dominance, MetricsError> {
    if a.scenario != b.scenario {
        return Err(MetricsError::ScenarioMismatch(a.scenario.clone(), b.scenario.clone()));
    }
    let adv = advantages(a, b);
    let dominates = |s: f64| adv.iter().all(|&d| s * d >= -SIMILARITY_BAND) && adv.iter().any(|&d| s * d > SIMILARITY_BAND);
    Ok(if dominates(1.0) {
        Dominance::ADominatesB
    } else if dominates(-1.0) {
        Dominance::BDominatesA
    } else {
        Dominance::Incomparable
    })
}

/// Indices of reports no other report dominates.
pub fn non_dominated(reports: &[MetricsReport]) -> Result<Vec<usize>, MetricsError> {
    let mut out = Vec::new();
    'outer: for i in 0..reports.len() {
        for j in 0..reports.len() {
            if i != j && pareto_compare(&reports[j], &reports[i])? == Dominance::ADominatesB {
                continue 'outer;
            }
        }
        out.push(i);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(su: f64, fr: f64, ql: f64, dr: f64) -> MetricsReport {
        MetricsReport {
            scenario: "s".into(),
            su_percent: su,
            fr,
            ql_us: ql,
            dr_gbps: dr,
            recovery_time_s: None,
            long_bw_percent: None,
            failed: false,
        }
    }

    #[test]
    fn fairness_values() {
        assert_eq!(fairness(&[50.0, 50.0]), 100.0);
        assert!((fairness(&[75.0, 25.0]) - 100.0 / 3.0).abs() < 1e-12);
        assert_eq!(fairness(&[]), 100.0);
    }

    #[test]
    fn pareto_band_cases() {
        let a = report(90.0, 90.0, 10.0, 0.0);
        assert_eq!(pareto_compare(&a, &a).unwrap(), Dominance::Incomparable);
        let b = report(80.0, 88.0, 12.0, 0.0);
        assert_eq!(pareto_compare(&a, &b).unwrap(), Dominance::ADominatesB);
        assert_eq!(pareto_compare(&b, &a).unwrap(), Dominance::BDominatesA);
        let c = report(80.0, 90.0, 2.0, 0.0);
        assert_eq!(pareto_compare(&a, &c).unwrap(), Dominance::Incomparable);
        let d = report(85.5, 90.0, 10.0, 0.0);
        assert_eq!(pareto_compare(&a, &d).unwrap(), Dominance::Incomparable);
        let mut e = a.clone();
        e.scenario = "t".into();
        assert!(pareto_compare(&a, &e).is_err());
        assert_eq!(non_dominated(&[a, b, c]).unwrap(), alloc::vec![0, 2]);
    }

    fn samples(rates: &[(u64, u64)]) -> Vec<RateSample> {
        rates
            .iter()
            .map(|&(t, r)| RateSample {
                time: SimTime(t),
                flow: 0,
                rate_bps: r,
            })
            .collect()
    }

    #[test]
    fn no_shorts_means_no_recovery_needed() {
        assert_eq!(recovery_time(&[], 0, &[], 100.0), Ok(Some(0)));
    }

    #[test]
    fn already_recovered_ends_at_hold_close() {
        let s = samples(&(0..30).map(|i| (i * 10, 100)).collect::<Vec<_>>());
        let shorts = [(SimTime(50), Some(SimTime(100)))];
        // samples at t >= 100 are 100, 110, ...; the tenth is at 190.
        assert_eq!(recovery_time(&s, 0, &shorts, 100.0), Ok(Some(140)));
    }

    #[test]
    fn dip_delays_recovery_and_unfinished_short_fails() {
        let mut r: Vec<(u64, u64)> = (0..12).map(|i| (i * 10, 10)).collect();
        r.extend((12..40).map(|i| (i * 10, 100)));
        let s = samples(&r);
        let shorts = [(SimTime(0), Some(SimTime(20)))];
        // smoothing needs 4 high samples (t = 150) before the first hit; the tenth hit is at 240.
        assert_eq!(recovery_time(&s, 0, &shorts, 100.0), Ok(Some(240)));
        assert_eq!(recovery_time(&s, 0, &[(SimTime(0), None)], 100.0), Ok(None));
        assert_eq!(recovery_time(&samples(&[(0, 10)]), 0, &shorts, 100.0), Ok(None));
    }
}
