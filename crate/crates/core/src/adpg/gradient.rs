use alloc::vec::Vec;

use crate::adpg::replay::KeySeparatedReplay;
use crate::error::AdpgError;
use crate::policy::{backward_window, PolicyParams, StepTape};

/// Which coefficient multiplies each step's action gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CoeffMode {
    /// The flow's mean coefficient over its whole rollout.
    #[default]
    TrajectoryMean,
    /// The coefficient observed at that step.
    PerStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GradStats {
    pub total_steps: usize,
    pub flows: usize,
    pub mean_reward: f64,
    pub mean_abs_coeff: f64,
}

/// Ascent direction for the policy parameters. Each step contributes
/// `w * d(action)/d(theta)` back-propagated through at most `bptt` steps of
/// the recurrent state; the sum is divided by the total step count.
pub fn adpg_gradient(replay: &KeySeparatedReplay, params: &PolicyParams, mode: CoeffMode, bptt: usize) -> Result<(Vec<f64>, GradStats), AdpgError> {
    let mut grads = alloc::vec![0.0; params.len()];
    let mut stats = GradStats::default();
    let bptt = bptt.max(1);
    for (key, steps) in replay.iter() {
        if steps.is_empty() {
            continue;
        }
        let tapes: Vec<&StepTape> = steps
            .iter()
            .map(|s| s.tape.as_ref().ok_or(AdpgError::MissingTape(key.1)))
            .collect::<Result<_, _>>()?;
        let cbar = steps.iter().map(|s| s.coeff).sum::<f64>() / steps.len() as f64;
        for (t, s) in steps.iter().enumerate() {
            let w = match mode {
                CoeffMode::TrajectoryMean => cbar,
                CoeffMode::PerStep => s.coeff,
            };
            stats.mean_reward += s.reward;
            stats.mean_abs_coeff += s.coeff.abs();
            if w != 0.0 {
                let lo = (t + 1).saturating_sub(bptt);
                backward_window(params, &tapes[lo..=t], w, &mut grads);
            }
        }
        stats.total_steps += steps.len();
        stats.flows += 1;
    }
    if stats.total_steps > 0 {
        let n = stats.total_steps as f64;
        grads.iter_mut().for_each(|g| *g /= n);
        stats.mean_reward /= n;
        stats.mean_abs_coeff /= n;
    }
    Ok((grads, stats))
}
