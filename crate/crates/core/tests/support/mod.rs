//! Oracles shared by the core integration tests and the acceptance target.
#![allow(dead_code)]

use std::collections::VecDeque;

use ccgym_core::adpg::{adpg_gradient, fixed_point_check, reward, CoeffMode, KeySeparatedReplay, RewardTerms, RolloutStep};
use ccgym_core::cc::{CcEvent, CcEventKind, FlowView, RateController};
use ccgym_core::metrics::{pareto_compare, Dominance, MetricsReport};
use ccgym_core::policy::{action_map, backward_window, forward, ObsConfig, ObsInput, PolicyParams, PolicyState, StepTape};
use ccgym_core::scenario::ScenarioSpec;
use ccgym_core::sim::TraceRecord;
use ccgym_core::{SimOptions, SimTime, Simulation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// Simulator invariants

/// A randomized small scenario.
#[derive(Debug, Clone)]
pub struct SimCase {
    /// 0 many-to-one, 1 all-to-all, 2 long-short.
    pub family: u8,
    /// Flow count for many-to-one and long-short, host count for all-to-all.
    pub size: u32,
    pub seed: u64,
    pub buffer_bytes: u64,
    pub mtu_bytes: u32,
    pub duration_ns: u64,
    pub rate_fraction: f64,
    pub ctrl_seed: u64,
}

impl SimCase {
    pub fn random(rng: &mut impl Rng) -> Self {
        let family = rng.gen_range(0..3u8);
        let size = match family {
            1 => rng.gen_range(2..=3),
            _ => rng.gen_range(2..=8),
        };
        let mtu_bytes = [500, 1000, 1500][rng.gen_range(0..3)];
        SimCase {
            family,
            size,
            seed: rng.gen(),
            buffer_bytes: rng.gen_range(2 * mtu_bytes as u64..200_000),
            mtu_bytes,
            duration_ns: rng.gen_range(50_000..250_000),
            rate_fraction: rng.gen_range(0.05..1.0),
            ctrl_seed: rng.gen(),
        }
    }

    pub fn spec(&self) -> ScenarioSpec {
        let mut s = match self.family {
            0 => ScenarioSpec::many_to_one(self.size, self.duration_ns, self.seed),
            1 => ScenarioSpec::all_to_all(self.size, self.duration_ns, self.seed),
            _ => {
                let mut s = ScenarioSpec::long_short(self.size, self.duration_ns, self.seed);
                if let Some(i) = s.interrupt.as_mut() {
                    i.short_bytes = 50_000;
                }
                s
            }
        };
        s.initial_rate_fraction = self.rate_fraction;
        s.net.buffer_bytes = self.buffer_bytes;
        s.net.mtu_bytes = self.mtu_bytes;
        s.net.max_burst_bytes = 16 * self.mtu_bytes;
        s.net.ecn.kmin_bytes = self.buffer_bytes / 4;
        s.net.ecn.kmax_bytes = self.buffer_bytes / 2;
        s
    }

    pub fn flow_count(&self) -> u32 {
        self.spec().total_flows
    }
}

/// Picks a random new rate on every probe and halves on NACKs, so rates swing
/// across the whole range and buffers overflow regularly.
pub struct Jitter {
    rng: ChaCha8Rng,
}

impl Jitter {
    pub fn new(seed: u64) -> Self {
        Jitter {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl RateController for Jitter {
    fn on_event(&mut self, view: &FlowView, ev: &CcEvent) -> Option<f64> {
        match ev.kind {
            CcEventKind::ProbeReturned { .. } => Some(view.rate_bps as f64 * self.rng.gen_range(0.5..2.0)),
            CcEventKind::NackReceived => Some(view.rate_bps as f64 * 0.5),
            _ => None,
        }
    }
}

/// Counts of what the checker saw, to make sure the interesting paths ran.
#[derive(Debug, Default, Clone, Copy)]
pub struct Coverage {
    pub events: u64,
    pub drops: u64,
    pub enqueued: u64,
    pub conservation_checks: u64,
}

impl core::ops::AddAssign for Coverage {
    fn add_assign(&mut self, o: Coverage) {
        self.events += o.events;
        self.drops += o.drops;
        self.enqueued += o.enqueued;
        self.conservation_checks += o.conservation_checks;
    }
}

fn conservation(sim: &Simulation) -> Result<(), String> {
    for (i, f) in sim.flows.iter().enumerate() {
        let inside = sim.data_bytes_in_network(i as u32);
        if f.bytes_sent != f.bytes_delivered + f.bytes_dropped + inside {
            return Err(format!(
                "flow {i} at {:?}: sent {} != delivered {} + dropped {} + in network {inside}",
                sim.now(),
                f.bytes_sent,
                f.bytes_delivered,
                f.bytes_dropped
            ));
        }
        if f.bytes_in_flight() != inside {
            return Err(format!("flow {i}: in-flight counter {} but {inside} bytes in the network", f.bytes_in_flight()));
        }
    }
    Ok(())
}

/// Step `case` event by event and check ordering, conservation, buffer
/// bounds, FIFO order and the drop law after every event. Returns the trace.
pub fn run_checked(case: &SimCase) -> Result<(Vec<TraceRecord>, Coverage), String> {
    let spec = case.spec();
    let topo = spec.build().map_err(|e| format!("{e}"))?;
    let mut sim = Simulation::new(
        topo,
        SimOptions {
            seed: spec.seed,
            trace: true,
            ..SimOptions::default()
        },
    )
    .map_err(|e| format!("{e}"))?;
    let mut ctrl = Jitter::new(case.ctrl_seed);
    let probe = sim.topo.net.probe_bytes as u64;
    let mut model: Vec<VecDeque<u64>> = vec![VecDeque::new(); sim.ports.len()];
    let mut cov = Coverage::default();
    let mut last: Option<(SimTime, u64)> = None;
    let end = spec.duration();
    loop {
        let before_occ: Vec<u64> = sim.ports.iter().map(|p| p.occupancy_bytes()).collect();
        let before_drops: Vec<u64> = sim.ports.iter().map(|p| p.drop_count).collect();
        let before_busy: Vec<bool> = sim.ports.iter().map(|p| p.is_busy()).collect();
        let before_dropped: u64 = sim.flows.iter().map(|f| f.bytes_dropped).sum();
        if !sim.step(&mut ctrl).map_err(|e| format!("{e}"))? {
            break;
        }
        cov.events += 1;
        let rec = *sim.trace().and_then(|t| t.last()).ok_or("no trace record")?;
        let key = (rec.time, rec.seq);
        if let Some(prev) = last {
            if key <= prev {
                return Err(format!("event order: {key:?} after {prev:?}"));
            }
        }
        last = Some(key);

        for (i, port) in sim.ports.iter().enumerate() {
            if port.occupancy_bytes() > port.capacity_bytes {
                return Err(format!("port {i} holds {} > {}", port.occupancy_bytes(), port.capacity_bytes));
            }
            let queued: u64 = port.iter().map(|p| p.size_bytes as u64).sum();
            if queued != port.occupancy_bytes() {
                return Err(format!("port {i} occupancy {} but queue holds {queued}", port.occupancy_bytes()));
            }
            if !port.is_busy() && port.queued_packets() > 0 {
                return Err(format!("port {i} idle with a backlog"));
            }
            if rec.port != Some(i as u32) && (port.occupancy_bytes() != before_occ[i] || port.queued_packets() != model[i].len()) {
                return Err(format!("port {i} changed during an event on {:?}", rec.port));
            }
        }

        if let Some(p) = rec.port {
            let p = p as usize;
            let port = &sim.ports[p];
            let now: Vec<u64> = port.iter().map(|k| k.id).collect();
            // FIFO: at most the head leaves, at most one packet joins at the tail.
            let old = &model[p];
            let removed = usize::from(!old.is_empty() && now.first() != old.front());
            let rest = old.len() - removed;
            if now.len() < rest || now.len() > rest + 1 || old.iter().skip(removed).zip(&now).any(|(a, b)| a != b) {
                return Err(format!("port {p} queue reordered: {old:?} -> {now:?}"));
            }
            let joined = now.len() - rest;
            if rec.kind == "arrive_switch" {
                let cap = port.capacity_bytes;
                if port.drop_count > before_drops[p] {
                    cov.drops += 1;
                    let data = sim.flows.iter().map(|f| f.bytes_dropped).sum::<u64>() - before_dropped;
                    let size = if data > 0 { data } else { probe };
                    if before_occ[p] + size <= cap {
                        return Err(format!("port {p} dropped {size} B at occupancy {} of {cap}", before_occ[p]));
                    }
                    if port.occupancy_bytes() != before_occ[p] || joined != 0 {
                        return Err(format!("port {p} changed on a drop"));
                    }
                } else if joined == 1 {
                    cov.enqueued += 1;
                    let size = port.iter().last().map_or(0, |k| k.size_bytes as u64);
                    if before_occ[p] + size > cap || port.occupancy_bytes() != before_occ[p] + size {
                        return Err(format!("port {p} admitted {size} B at occupancy {} of {cap}", before_occ[p]));
                    }
                } else if before_busy[p] {
                    return Err(format!("port {p}: arrival at a busy port neither queued nor dropped"));
                }
            }
            model[p] = now.into_iter().collect();
        }

        if cov.events % 16 == 0 {
            conservation(&sim)?;
            cov.conservation_checks += 1;
        }
        if sim.now() > end {
            break;
        }
    }
    conservation(&sim)?;
    cov.conservation_checks += 1;
    Ok((sim.take_trace().unwrap_or_default(), cov))
}

// ---------------------------------------------------------------------------
// Finite-difference check of the policy backward pass

fn sequence_action(p: &PolicyParams, s0: &PolicyState, obs: &[Vec<f64>]) -> (f64, Vec<StepTape>) {
    let mut s = *s0;
    let mut tapes = Vec::with_capacity(obs.len());
    let mut raw = 0.0;
    for o in obs {
        let (r, next, tape) = forward(p, &s, o).expect("finite forward");
        raw = r;
        s = next;
        tapes.push(tape);
    }
    (action_map(raw), tapes)
}

fn relu_pattern(tapes: &[StepTape]) -> Vec<bool> {
    tapes.iter().flat_map(|t| t.h1.iter().chain(t.h2.iter()).map(|v| *v > 0.0)).collect()
}

#[derive(Debug, Clone, Copy)]
pub struct FdOutcome {
    pub max_rel_err: f64,
    pub params: usize,
    /// Draws thrown away because a perturbation crossed a ReLU kink.
    pub redraws: usize,
}

/// Analytic `d action_T / d theta` over a window of 1 to 4 steps against
/// central differences over every parameter. Relative error uses an absolute
/// floor of 1e-8 for parameters with (near) zero gradient.
pub fn fd_check(seed: u64) -> FdOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let obs_cfg = ObsConfig::default();
    let h = 1e-4f32;
    let mut redraws = 0;
    loop {
        let scale = rng.gen_range(0.1..0.6);
        let p = PolicyParams::init_uniform(obs_cfg.dim(), scale, &mut rng);
        let steps = rng.gen_range(1..=4);
        let obs: Vec<Vec<f64>> = (0..steps).map(|_| (0..obs_cfg.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let mut s0 = PolicyState::default();
        for k in 0..s0.h.len() {
            s0.h[k] = rng.gen_range(-0.5..0.5);
            s0.c[k] = rng.gen_range(-1.0..1.0);
        }
        let (_, tapes) = sequence_action(&p, &s0, &obs);
        let pattern = relu_pattern(&tapes);
        let mut analytic = vec![0.0; p.len()];
        backward_window(&p, &tapes, 1.0, &mut analytic);
        let mut max_rel: f64 = 0.0;
        let mut kink = false;
        let mut q = p.clone();
        for (j, &an) in analytic.iter().enumerate() {
            let base = p.data[j];
            q.data[j] = base + h;
            let (up, tu) = sequence_action(&q, &s0, &obs);
            let hi = q.data[j];
            q.data[j] = base - h;
            let (down, td) = sequence_action(&q, &s0, &obs);
            let lo = q.data[j];
            q.data[j] = base;
            if relu_pattern(&tu) != pattern || relu_pattern(&td) != pattern {
                kink = true;
                break;
            }
            let fd = (up - down) / (hi as f64 - lo as f64);
            let err = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-8);
            max_rel = max_rel.max(err);
        }
        if kink {
            redraws += 1;
            continue;
        }
        return FdOutcome {
            max_rel_err: max_rel,
            params: p.len(),
            redraws,
        };
    }
}

// ---------------------------------------------------------------------------
// Differentiable toy: approximate gradient against the exact one

/// Flows share one link. Each decision multiplies every rate by its action;
/// the shared inflation is `1 + kappa * total_rate`, so the reward is a smooth
/// function of the parameters. With one flow the inflation depends only on
/// the agent's own actions; with several, each action also moves the other
/// flows' rewards, a coupling the approximate gradient does not model.
#[derive(Debug, Clone)]
pub struct Toy {
    pub rates: Vec<f64>,
    pub kappa: f64,
    pub target: f64,
    pub steps: usize,
}

impl Toy {
    pub fn random(rng: &mut impl Rng, max_flows: usize) -> Self {
        let n = rng.gen_range(1..=max_flows);
        Toy {
            rates: (0..n).map(|_| 10f64.powf(rng.gen_range(-1.5..0.0))).collect(),
            kappa: rng.gen_range(0.5..4.0),
            target: rng.gen_range(1.0..4.0),
            steps: rng.gen_range(4..=16),
        }
    }

    /// Mean reward over every flow and every post-decision state; with
    /// `replay`, also the recorded decisions.
    pub fn rollout(&self, p: &PolicyParams, obs_cfg: &ObsConfig, mut replay: Option<&mut KeySeparatedReplay>) -> f64 {
        let mut rates = self.rates.clone();
        let mut states = vec![PolicyState::default(); rates.len()];
        let mut total = 0.0;
        for t in 0..self.steps {
            let infl = 1.0 + self.kappa * rates.iter().sum::<f64>();
            for (i, r) in rates.iter_mut().enumerate() {
                let obs = obs_cfg.build(&ObsInput {
                    rate_norm: *r,
                    rtt_inflation: infl,
                    cnp_count: 0,
                    nack_count: 0,
                });
                let (raw, next, tape) = forward(p, &states[i], &obs).expect("finite forward");
                states[i] = next;
                let coeff = self.target - infl * r.sqrt();
                let a = action_map(raw);
                if let Some(rep) = replay.as_deref_mut() {
                    rep.push(
                        (0, i as u32),
                        RolloutStep {
                            obs,
                            raw,
                            action: a,
                            coeff,
                            reward: -(coeff * coeff),
                            time: SimTime(t as u64),
                            tape: Some(tape),
                        },
                    );
                }
                *r *= a;
            }
            let infl = 1.0 + self.kappa * rates.iter().sum::<f64>();
            total += rates.iter().map(|r| -(self.target - infl * r.sqrt()).powi(2)).sum::<f64>();
        }
        total / (self.steps * rates.len()) as f64
    }
}

/// Derivative of the exact objective along the normalized approximate
/// gradient, by central differences. Positive means the approximate update
/// climbs the exact objective.
pub fn toy_alignment(seed: u64, max_flows: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let obs_cfg = ObsConfig::default();
    let toy = Toy::random(&mut rng, max_flows);
    let scale = rng.gen_range(0.05..0.5);
    let p = PolicyParams::init_uniform(obs_cfg.dim(), scale, &mut rng);
    let mut rep = KeySeparatedReplay::new();
    toy.rollout(&p, &obs_cfg, Some(&mut rep));
    let (g, _) = adpg_gradient(&rep, &p, CoeffMode::TrajectoryMean, 16).expect("gradient");
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return 0.0;
    }
    let h = 1e-3;
    let shifted = |sign: f64| {
        let mut q = p.clone();
        for (w, gi) in q.data.iter_mut().zip(&g) {
            *w = (*w as f64 + sign * h * gi / norm) as f32;
        }
        q
    };
    (toy.rollout(&shifted(1.0), &obs_cfg, None) - toy.rollout(&shifted(-1.0), &obs_cfg, None)) / (2.0 * h)
}

// ---------------------------------------------------------------------------
// RTT inflation at fixed fair rates

/// Holds every flow at a fixed rate and records probe RTT inflation after
/// `from`.
pub struct FixedRate {
    pub rate_bps: f64,
    pub from: SimTime,
    pub inflations: Vec<f64>,
}

impl RateController for FixedRate {
    fn on_flow_start(&mut self, _view: &FlowView, _now: SimTime) -> Option<f64> {
        Some(self.rate_bps)
    }

    fn on_event(&mut self, view: &FlowView, ev: &CcEvent) -> Option<f64> {
        if let CcEventKind::ProbeReturned { rtt_ns, .. } = ev.kind {
            if ev.now >= self.from {
                self.inflations.push(rtt_ns as f64 / view.base_rtt_ns as f64);
            }
        }
        None
    }
}

/// Median probe RTT inflation of `n` flows each sending at `C / n` into one
/// port, after a 20% warm-up.
pub fn median_inflation(n: u32, duration_ns: u64, seed: u64) -> f64 {
    let mut spec = ScenarioSpec::many_to_one(n, duration_ns, seed);
    spec.initial_rate_fraction = 1.0 / n as f64;
    let mut sim = Simulation::new(spec.build().expect("valid scenario"), SimOptions { seed, ..SimOptions::default() }).expect("simulation");
    let mut ctrl = FixedRate {
        rate_bps: spec.net.link_rate_bps as f64 / n as f64,
        from: SimTime(duration_ns / 5),
        inflations: Vec::new(),
    };
    sim.run_until(spec.duration(), &mut ctrl).expect("run");
    let mut v = ctrl.inflations;
    assert!(!v.is_empty(), "no probes returned");
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Spearman rank correlation; ties get their average rank.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            for k in i..=j {
                r[idx[k]] = (i + j) as f64 / 2.0;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

// ---------------------------------------------------------------------------
// Reward, fixed points, domination

/// Nonpositivity everywhere and zero exactly on `inflation * sqrt(rate) = target`,
/// over `n` random points plus `n` points placed on the zero locus.
pub fn reward_grid(n: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n {
        let target = match rng.gen_range(0..4) {
            0 => 1.0,
            1 => 2.0,
            2 => 20.0,
            _ => rng.gen_range(0.1..30.0),
        };
        let rate_norm: f64 = rng.gen_range(1e-6..=1.0);
        let t = RewardTerms {
            target,
            rtt_inflation: rng.gen_range(1.0..50.0),
            rate_norm,
        };
        let r = reward(t).map_err(|e| e.to_string())?;
        let gap = t.rtt_inflation * rate_norm.sqrt() - target;
        if r > 0.0 || (gap.abs() > 1e-6 && r >= 0.0) || r != -(gap * gap) {
            return Err(format!("{t:?} -> {r}"));
        }
        let on = RewardTerms {
            rtt_inflation: target / rate_norm.sqrt(),
            ..t
        };
        let r0 = reward(on).map_err(|e| e.to_string())?;
        if !(-1e-24..=0.0).contains(&r0) {
            return Err(format!("on the zero locus {on:?} -> {r0}"));
        }
    }
    if reward(RewardTerms {
        target: 2.0,
        rtt_inflation: 1.0,
        rate_norm: 0.0,
    })
    .is_ok()
    {
        return Err("zero rate accepted".into());
    }
    Ok(())
}

pub fn fixed_point_cases() -> Result<(), String> {
    let c = 12.5e9;
    type Case = (&'static str, Vec<f64>, Vec<f64>, f64, bool);
    let cases: [Case; 7] = [
        ("4 flows at 12.5/4 Gbit/s on target", vec![c / 4.0; 4], vec![4.0; 4], 2.0, true),
        ("4 flows at 12.5/4 Gbit/s off target", vec![c / 4.0; 4], vec![3.0; 4], 2.0, false),
        ("1 flow at line rate, low inflation", vec![c], vec![1.0], 2.0, true),
        ("1 flow at line rate, above target", vec![c], vec![2.5], 2.0, false),
        ("2 flows at 0.9C and 0.1C", vec![0.9 * c, 0.1 * c], vec![2.0; 2], 2.0, false),
        ("8 flows at C/8, strict target", vec![c / 8.0; 8], vec![8f64.sqrt(); 8], 1.0, true),
        ("4 flows at C/8, under-filled link", vec![c / 8.0; 4], vec![2.0 * 8f64.sqrt(); 4], 2.0, false),
    ];
    for (name, rates, infl, target, want) in cases {
        if fixed_point_check(&rates, c, &infl, target, 1e-9) != want {
            return Err(format!("{name}: expected {want}"));
        }
    }
    Ok(())
}

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

/// Fixed band cases plus antisymmetry and irreflexivity on `n` random pairs.
pub fn pareto_cases(n: usize, seed: u64) -> Result<(), String> {
    use Dominance::*;
    let base = report(80.0, 90.0, 20.0, 0.0);
    let fixed = [
        ("identical", base.clone(), Incomparable),
        ("SU better by 6", report(86.0, 90.0, 20.0, 0.0), ADominatesB),
        ("SU better by exactly 5", report(85.0, 90.0, 20.0, 0.0), Incomparable),
        ("SU better by 6, QL worse by 5", report(86.0, 90.0, 25.0, 0.0), ADominatesB),
        ("SU better by 6, QL worse by 5.5", report(86.0, 90.0, 25.5, 0.0), Incomparable),
        ("QL lower by 10", report(80.0, 90.0, 10.0, 0.0), ADominatesB),
        ("DR higher by 6", report(80.0, 90.0, 20.0, 6.0), BDominatesA),
        ("trade-off", report(90.0, 90.0, 40.0, 0.0), Incomparable),
    ];
    let c = |a: &MetricsReport, b: &MetricsReport| pareto_compare(a, b).map_err(|e| e.to_string());
    for (name, a, want) in fixed {
        if c(&a, &base)? != want {
            return Err(format!("{name}: expected {want:?}"));
        }
    }
    let other = MetricsReport {
        scenario: "t".into(),
        ..base.clone()
    };
    if pareto_compare(&base, &other).is_ok() {
        return Err("different scenarios compared".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        report(
            rng.gen_range(0.0..100.0),
            rng.gen_range(0.0..100.0),
            rng.gen_range(0.0..50.0),
            rng.gen_range(0.0..10.0),
        )
    };
    for _ in 0..n {
        let a = draw(&mut rng);
        let mut b = draw(&mut rng);
        if rng.gen_bool(0.5) {
            // Near neighbours exercise the band edges.
            b = report(
                a.su_percent + rng.gen_range(-8.0..8.0),
                a.fr + rng.gen_range(-8.0..8.0),
                a.ql_us + rng.gen_range(-8.0..8.0),
                a.dr_gbps + rng.gen_range(-8.0..8.0),
            );
        }
        if c(&a, &a)? != Incomparable {
            return Err(format!("{a:?} dominates itself"));
        }
        let (ab, ba) = (c(&a, &b)?, c(&b, &a)?);
        let mirrored = match ab {
            ADominatesB => BDominatesA,
            BDominatesA => ADominatesB,
            Incomparable => Incomparable,
        };
        if ba != mirrored {
            return Err(format!("not antisymmetric: {ab:?} vs {ba:?} for {a:?} / {b:?}"));
        }
    }
    Ok(())
}
