//! Parallel rollout collection and the training driver.

use std::io::Write;

use anyhow::Result;
use ccgym_core::adpg::{CollectExecutor, Collected, IterationRecord, TrainConfig, TrainEnv, Trainer};
use ccgym_core::AdpgError;
use rayon::prelude::*;

use crate::checkpoint::Checkpoint;

/// Collects every environment on the rayon pool. Results come back in
/// environment order, so training is independent of the thread count.
pub struct Rayon;

impl CollectExecutor for Rayon {
    fn run(&self, envs: &mut [TrainEnv], job: &(dyn Fn(&mut TrainEnv) -> Result<Collected, AdpgError> + Sync)) -> Vec<Result<Collected, AdpgError>> {
        envs.par_iter_mut().map(job).collect()
    }
}

pub const CURVE_HEADER: &str = "iteration,mean_reward,mean_abs_coeff,su,fr";

pub fn curve_line(r: &IterationRecord) -> String {
    format!("{},{:.6},{:.6},{:.3},{:.3}", r.iteration, r.mean_reward, r.mean_abs_coeff, r.su, r.fr)
}

pub fn write_curve(w: &mut impl Write, curve: &[IterationRecord]) -> std::io::Result<()> {
    writeln!(w, "{CURVE_HEADER}")?;
    for r in curve {
        writeln!(w, "{}", curve_line(r))?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub curve: Vec<IterationRecord>,
    /// Set when training stopped early; the checkpoint holds the last good
    /// parameters.
    pub error: Option<AdpgError>,
}

/// Train until the iteration count or step budget runs out.
pub fn train(cfg: TrainConfig, parallel: bool, mut on_iteration: impl FnMut(&IterationRecord)) -> Result<TrainOutcome> {
    let obs = cfg.obs.clone();
    let mut tr = Trainer::new(cfg)?;
    let mut curve = Vec::new();
    let mut error = None;
    while tr.can_continue() {
        let rec = if parallel {
            tr.iterate(&Rayon)
        } else {
            tr.iterate(&ccgym_core::adpg::Sequential)
        };
        match rec {
            Ok(r) => {
                on_iteration(&r);
                curve.push(r);
            }
            Err(e) => {
                error = Some(e);
                break;
            }
        }
    }
    Ok(TrainOutcome {
        checkpoint: Checkpoint::Float { obs, params: tr.into_params() },
        curve,
        error,
    })
}
