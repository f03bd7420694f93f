use alloc::vec::Vec;

use crate::adpg::replay::{KeySeparatedReplay, RolloutStep};
use crate::adpg::reward::RewardTerms;
use crate::cc::{CcEvent, CcEventKind, FlowView, RateController};
use crate::error::AdpgError;
use crate::policy::{action_map, ObsConfig, ObsInput, Policy, PolicyState};
use crate::units::SimTime;

/// Drives every flow of one simulation with a shared policy. Each flow keeps
/// its own recurrent state and acts once per returned probe.
pub struct AdpgAgent<'p, P: Policy + ?Sized> {
    policy: &'p P,
    obs: ObsConfig,
    target: f64,
    env: u32,
    record: bool,
    states: Vec<PolicyState>,
    replay: KeySeparatedReplay,
    buf: Vec<f64>,
    decisions: u64,
    error: Option<AdpgError>,
}

impl<'p, P: Policy + ?Sized> AdpgAgent<'p, P> {
    pub fn new(policy: &'p P, obs: ObsConfig, target: f64) -> Self {
        AdpgAgent {
            policy,
            obs,
            target,
            env: 0,
            record: false,
            states: Vec::new(),
            replay: KeySeparatedReplay::new(),
            buf: Vec::new(),
            decisions: 0,
            error: None,
        }
    }

    /// Record rollout steps (with tapes) under `(env, flow)`.
    pub fn recording(mut self, env: u32) -> Self {
        self.record = true;
        self.env = env;
        self
    }

    /// Continue from recurrent states carried over from an earlier agent.
    pub fn with_states(mut self, states: Vec<PolicyState>) -> Self {
        self.states = states;
        self
    }

    pub fn into_parts(self) -> (Vec<PolicyState>, KeySeparatedReplay) {
        (self.states, self.replay)
    }

    pub fn decisions(&self) -> u64 {
        self.decisions
    }

    /// First error hit while acting; the controller interface cannot return it.
    pub fn error(&self) -> Option<&AdpgError> {
        self.error.as_ref()
    }

    pub fn replay(&self) -> &KeySeparatedReplay {
        &self.replay
    }

    pub fn take_replay(&mut self) -> KeySeparatedReplay {
        core::mem::take(&mut self.replay)
    }

    pub fn reset_states(&mut self) {
        self.states.iter_mut().for_each(|s| *s = PolicyState::default());
    }

    fn state_mut(&mut self, flow: usize) -> &mut PolicyState {
        if self.states.len() <= flow {
            self.states.resize(flow + 1, PolicyState::default());
        }
        &mut self.states[flow]
    }

    /// Decide the next rate for a flow whose probe came back after `rtt_ns`.
    pub fn on_probe_return(&mut self, view: &FlowView, rtt_ns: u64, now: SimTime) -> Result<f64, AdpgError> {
        if view.base_rtt_ns == 0 {
            return Err(AdpgError::Uninitialized(view.flow_id));
        }
        let terms = RewardTerms {
            target: self.target,
            rtt_inflation: rtt_ns as f64 / view.base_rtt_ns as f64,
            rate_norm: view.rate_norm(),
        };
        let coeff = terms.coefficient()?;
        self.obs.build_into(
            &ObsInput {
                rate_norm: terms.rate_norm,
                rtt_inflation: terms.rtt_inflation,
                cnp_count: view.cnp_count,
                nack_count: view.nack_count,
            },
            &mut self.buf,
        );
        let state = *self.state_mut(view.flow_id as usize);
        let (raw, next, tape) = self.policy.step(&state, &self.buf, self.record)?;
        *self.state_mut(view.flow_id as usize) = next;
        let action = action_map(raw);
        self.decisions += 1;
        if self.record {
            let step = RolloutStep {
                obs: self.buf.clone(),
                raw,
                action,
                coeff,
                reward: -(coeff * coeff),
                time: now,
                tape,
            };
            self.replay.push((self.env, view.flow_id), step);
        }
        Ok(action * view.rate_bps as f64)
    }
}

impl<P: Policy + ?Sized> RateController for AdpgAgent<'_, P> {
    fn on_flow_start(&mut self, view: &FlowView, _now: SimTime) -> Option<f64> {
        *self.state_mut(view.flow_id as usize) = PolicyState::default();
        None
    }

    fn on_event(&mut self, view: &FlowView, ev: &CcEvent) -> Option<f64> {
        let CcEventKind::ProbeReturned { rtt_ns, .. } = ev.kind else {
            return None;
        };
        if self.error.is_some() {
            return None;
        }
        match self.on_probe_return(view, rtt_ns, ev.now) {
            Ok(r) => Some(r),
            Err(e) => {
                self.error = Some(e);
                None
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::PolicyParams;

    fn view(rate_bps: u64) -> FlowView {
        FlowView {
            flow_id: 3,
            rate_bps,
            base_rtt_ns: 4000,
            link_rate_bps: 100,
            min_rate_bps: 1,
            cnp_count: 0,
            nack_count: 0,
        }
    }

    #[test]
    fn zero_policy_keeps_rate_and_records_coeff() {
        let p = PolicyParams::zeros(ObsConfig::default().dim());
        let mut a = AdpgAgent::new(&p, ObsConfig::default(), 2.0).recording(7);
        let r = a.on_probe_return(&view(100), 12_000, SimTime(5)).unwrap();
        assert_eq!(r, 100.0);
        let steps = a.replay().get((7, 3)).unwrap();
        assert_eq!(steps.len(), 1);
        assert_eq!(steps[0].coeff, -1.0);
        assert!(steps[0].tape.is_some());
    }

    #[test]
    fn missing_base_rtt_is_an_error() {
        let p = PolicyParams::zeros(4);
        let mut a = AdpgAgent::new(&p, ObsConfig::default(), 2.0);
        let mut v = view(10);
        v.base_rtt_ns = 0;
        assert_eq!(a.on_probe_return(&v, 100, SimTime(0)), Err(AdpgError::Uninitialized(3)));
    }
}
