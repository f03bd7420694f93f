//! Fixed measurements of a policy outside training.

use anyhow::{bail, Result};
use ccgym_core::adpg::AdpgAgent;
use ccgym_core::policy::{action_map, ObsConfig, ObsInput, Policy, PolicyState};
use ccgym_core::scenario::ScenarioSpec;
use ccgym_core::{SimOptions, Simulation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Mean `|action(a) - action(b)|` over `n` random observations fed to both
/// policies as one sequence, each carrying its own recurrent state.
/// Rates are log-uniform over three decades, inflation uniform in [1, 10].
pub fn action_deviation(a: &dyn Policy, b: &dyn Policy, obs: &ObsConfig, n: usize, seed: u64) -> Result<f64> {
    if n == 0 {
        bail!("need at least one observation");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sa, mut sb) = (PolicyState::default(), PolicyState::default());
    let mut total = 0.0;
    for _ in 0..n {
        let inp = ObsInput {
            rate_norm: 10f64.powf(rng.gen_range(-3.0..0.0)),
            rtt_inflation: rng.gen_range(1.0..10.0),
            cnp_count: rng.gen_range(0..4),
            nack_count: rng.gen_range(0..2),
        };
        let o = obs.build(&inp);
        let (ra, na, _) = a.step(&sa, &o, false)?;
        let (rb, nb, _) = b.step(&sb, &o, false)?;
        total += (action_map(ra) - action_map(rb)).abs();
        sa = na;
        sb = nb;
    }
    Ok(total / n as f64)
}

/// The rollout used to compare coefficient magnitudes before and after
/// training: 4→1 from line rate for 5 ms.
pub fn coeff_probe_spec() -> ScenarioSpec {
    ScenarioSpec::many_to_one(4, 5_000_000, 3)
}

/// Mean `|target - inflation * sqrt(rate)|` over every decision of `spec`.
pub fn mean_abs_coeff<P: Policy + ?Sized>(p: &P, obs: &ObsConfig, target: f64, spec: &ScenarioSpec) -> Result<f64> {
    let mut sim = Simulation::new(
        spec.build()?,
        SimOptions {
            seed: spec.seed,
            ..SimOptions::default()
        },
    )?;
    let mut agent = AdpgAgent::new(p, obs.clone(), target).recording(0);
    sim.run_until(spec.duration(), &mut agent)?;
    if let Some(e) = agent.error() {
        bail!("agent failed: {e}");
    }
    let (mut sum, mut n) = (0.0, 0usize);
    for (_, steps) in agent.replay().iter() {
        for s in steps {
            sum += s.coeff.abs();
            n += 1;
        }
    }
    if n == 0 {
        bail!("no decisions in probe rollout");
    }
    Ok(sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ccgym_core::policy::{PolicyParams, QuantizedPolicy};

    #[test]
    fn a_policy_does_not_deviate_from_itself() {
        let obs = ObsConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = PolicyParams::init_uniform(obs.dim(), 0.2, &mut rng);
        assert_eq!(action_deviation(&p, &p, &obs, 50, 1).unwrap(), 0.0);
        let q = QuantizedPolicy::quantize(&p).unwrap();
        let d = action_deviation(&p, &q, &obs, 200, 1).unwrap();
        assert!(d > 0.0 && d < 0.01, "{d}");
    }

    #[test]
    fn zero_policy_probe_coefficient_is_positive() {
        let obs = ObsConfig::default();
        let p = PolicyParams::zeros(obs.dim());
        let spec = ScenarioSpec::many_to_one(2, 200_000, 0);
        assert!(mean_abs_coeff(&p, &obs, 2.0, &spec).unwrap() > 0.0);
    }
}
