//! Running one scenario under one rate controller.

use std::fmt;
use std::io::Write;

use anyhow::{anyhow, bail, Result};
use ccgym_core::adpg::AdpgAgent;
use ccgym_core::cc::{Dcqcn, Hpcc, PerFlow, RateController, Swift};
use ccgym_core::metrics::{compute_metrics, MetricsReport, MetricsWindow, WARMUP_FRACTION};
use ccgym_core::policy::Policy;
use ccgym_core::scenario::ScenarioSpec;
use ccgym_core::sim::TraceRecord;
use ccgym_core::{SimOptions, Simulation};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::checkpoint::Checkpoint;
use crate::config::AlgoParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Adpg,
    Dcqcn,
    Hpcc,
    Swift,
}

impl Algo {
    pub fn as_str(self) -> &'static str {
        match self {
            Algo::Adpg => "adpg",
            Algo::Dcqcn => "dcqcn",
            Algo::Hpcc => "hpcc",
            Algo::Swift => "swift",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What a run needs besides the scenario.
#[derive(Debug, Clone, Copy)]
pub struct Controller<'a> {
    pub algo: Algo,
    pub params: &'a AlgoParams,
    pub checkpoint: Option<&'a Checkpoint>,
    /// Operating point handed to the agent; it only affects recorded
    /// coefficients, never actions.
    pub target: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: MetricsReport,
    pub events: u64,
    pub trace: Option<Vec<TraceRecord>>,
}

fn drive<C: RateController + ?Sized>(spec: &ScenarioSpec, trace: bool, ctrl: &mut C) -> Result<(Simulation, u64)> {
    let opts = SimOptions {
        seed: spec.seed,
        trace,
        samples: true,
        ..SimOptions::default()
    };
    let mut sim = Simulation::new(spec.build()?, opts)?;
    sim.run_until(spec.duration(), ctrl)?;
    let ev = sim.events_processed();
    Ok((sim, ev))
}

fn drive_policy<P: Policy + ?Sized>(spec: &ScenarioSpec, trace: bool, p: &P, ck: &Checkpoint, target: f64) -> Result<(Simulation, u64)> {
    let mut agent = AdpgAgent::new(p, ck.obs().clone(), target);
    let out = drive(spec, trace, &mut agent)?;
    if let Some(e) = agent.error() {
        bail!("agent failed: {e}");
    }
    Ok(out)
}

/// Simulate `spec` for its full duration and measure the steady state.
pub fn run_scenario(spec: &ScenarioSpec, ctrl: Controller<'_>, trace: bool) -> Result<RunOutput> {
    let p = ctrl.params;
    let (mut sim, events) = match ctrl.algo {
        Algo::Adpg => {
            let ck = ctrl.checkpoint.ok_or_else(|| anyhow!("adpg needs a checkpoint"))?;
            match ck {
                Checkpoint::Float { params, .. } => drive_policy(spec, trace, params, ck, ctrl.target)?,
                Checkpoint::Int8 { policy, .. } => drive_policy(spec, trace, policy, ck, ctrl.target)?,
            }
        }
        Algo::Dcqcn => drive(spec, trace, &mut PerFlow::new(Dcqcn::new(p.dcqcn)))?,
        Algo::Hpcc => drive(spec, trace, &mut PerFlow::new(Hpcc::new(p.hpcc)))?,
        Algo::Swift => drive(spec, trace, &mut PerFlow::new(Swift::new(p.swift)))?,
    };
    let window = MetricsWindow::steady(spec.duration(), WARMUP_FRACTION);
    let report = compute_metrics(&sim, spec, window)?;
    Ok(RunOutput {
        report,
        events,
        trace: sim.take_trace(),
    })
}

/// One `time_ns kind flow_id port occupancy` line per record.
pub fn write_trace(w: &mut impl Write, trace: &[TraceRecord]) -> std::io::Result<()> {
    for r in trace {
        writeln!(w, "{r}")?;
    }
    Ok(())
}

/// SHA-256 of the text trace, hex encoded.
pub fn trace_digest(trace: &[TraceRecord]) -> String {
    let mut h = Sha256::new();
    for r in trace {
        h.update(format!("{r}\n").as_bytes());
    }
    hex::encode(h.finalize())
}
