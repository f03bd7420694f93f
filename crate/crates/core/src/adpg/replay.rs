//! Rollout storage keyed by (environment, flow). Flows act asynchronously,
//! so each key keeps its own time-ordered trajectory and keys never mix.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::packet::FlowId;
use crate::policy::StepTape;
use crate::units::SimTime;

/// `(environment index, flow id)`.
pub type ReplayKey = (u32, FlowId);

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutStep {
    pub obs: Vec<f64>,
    pub raw: f64,
    pub action: f64,
    /// `target - inflation * sqrt(rate)` at the state the action was taken in.
    pub coeff: f64,
    pub reward: f64,
    pub time: SimTime,
    pub tape: Option<StepTape>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeySeparatedReplay {
    map: BTreeMap<ReplayKey, Vec<RolloutStep>>,
}

impl KeySeparatedReplay {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append a step. Steps under one key must arrive in time order.
    pub fn push(&mut self, key: ReplayKey, step: RolloutStep) {
        let traj = self.map.entry(key).or_default();
        if let Some(last) = traj.last() {
            assert!(step.time >= last.time, "rollout steps out of time order for {key:?}");
        }
        traj.push(step);
    }

    /// Append a whole trajectory for `key`.
    pub fn extend(&mut self, key: ReplayKey, steps: Vec<RolloutStep>) {
        for s in steps {
            self.push(key, s);
        }
    }

    pub fn get(&self, key: ReplayKey) -> Option<&[RolloutStep]> {
        self.map.get(&key).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ReplayKey, &Vec<RolloutStep>)> {
        self.map.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = ReplayKey> + '_ {
        self.map.keys().copied()
    }

    pub fn total_steps(&self) -> usize {
        self.map.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total_steps() == 0
    }

    pub fn clear(&mut self) {
        self.map.clear();
    }

    /// Combine replays; trajectories under the same key are concatenated in
    /// argument order.
    pub fn merge(parts: impl IntoIterator<Item = KeySeparatedReplay>) -> Self {
        let mut out = Self::new();
        for part in parts {
            for (k, v) in part.map {
                out.extend(k, v);
            }
        }
        out
    }

    /// One replay per environment index.
    pub fn split_by_env(self) -> BTreeMap<u32, KeySeparatedReplay> {
        let mut out: BTreeMap<u32, KeySeparatedReplay> = BTreeMap::new();
        for (k, v) in self.map {
            out.entry(k.0).or_default().map.insert(k, v);
        }
        out
    }
}
