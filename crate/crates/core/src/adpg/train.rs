//! Training loop: collect rollouts from persistent simulated environments,
//! reduce them to one gradient, apply a single update, repeat.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adpg::agent::AdpgAgent;
use crate::adpg::gradient::{adpg_gradient, CoeffMode};
use crate::adpg::replay::KeySeparatedReplay;
use crate::error::{AdpgError, ConfigError};
use crate::metrics::{compute_metrics, MetricsWindow};
use crate::policy::{ObsConfig, Optimizer, OptimizerKind, PolicyParams, PolicyState};
use crate::scenario::ScenarioSpec;
use crate::sim::{SimOptions, Simulation};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    /// Shared operating point: 1 strict, 2 standard, 20 loose.
    pub target: f64,
    pub lr: f64,
    /// Anneal the learning rate linearly to this value by the end of the
    /// iteration count or step budget, whichever comes first.
    pub lr_final: Option<f64>,
    pub optimizer: OptimizerKind,
    /// Decisions per flow collected in each iteration.
    pub rollout_len: usize,
    pub iterations: usize,
    /// Hard cap on decisions summed over all flows and iterations.
    pub max_decision_steps: u64,
    /// Truncation of back-propagation through the recurrent state.
    pub bptt: usize,
    pub coeff_mode: CoeffMode,
    pub scenarios: Vec<ScenarioSpec>,
    /// Simulated time after which an environment restarts with a fresh seed.
    pub episode_ns: u64,
    /// Range of the random initial rate fraction drawn at every restart.
    pub initial_rate_range: [f64; 2],
    pub seed: u64,
    pub init_scale: f64,
    pub obs: ObsConfig,
    /// Rescale the gradient to this L2 norm when it is longer.
    pub grad_clip: Option<f64>,
    /// Decay of an exponential moving average of the parameters. When set,
    /// the averaged parameters are what training hands back.
    pub param_ema: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            target: 2.0,
            lr: 5e-3,
            lr_final: None,
            optimizer: OptimizerKind::Adam {
                beta1: 0.9,
                beta2: 0.9,
                eps: 1e-8,
            },
            rollout_len: 64,
            iterations: 1000,
            max_decision_steps: 50_000,
            bptt: 16,
            coeff_mode: CoeffMode::TrajectoryMean,
            scenarios: [2, 4, 8].iter().map(|&n| ScenarioSpec::many_to_one(n, 2_000_000, 0)).collect(),
            episode_ns: 2_000_000,
            initial_rate_range: [0.02, 0.3],
            seed: 0,
            init_scale: 0.1,
            obs: ObsConfig::default(),
            grad_clip: Some(1.0),
            param_ema: Some(0.9),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |what| Err(ConfigError::InvalidParameter(what));
        if !(self.target > 0.0 && self.target.is_finite()) {
            return bad("target");
        }
        if self.rollout_len == 0 {
            return bad("rollout_len");
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad("lr");
        }
        if self.lr_final.is_some_and(|f| !(f >= 0.0 && f.is_finite())) {
            return bad("lr_final");
        }
        if self.scenarios.is_empty() {
            return bad("scenarios");
        }
        if self.obs.dim() == 0 {
            return bad("obs");
        }
        let [lo, hi] = self.initial_rate_range;
        if !(0.0 < lo && lo <= hi && hi <= 1.0) {
            return bad("initial_rate_range");
        }
        if self.episode_ns == 0 {
            return bad("episode_ns");
        }
        if self.param_ema.is_some_and(|d| !(0.0..1.0).contains(&d)) {
            return bad("param_ema");
        }
        Ok(())
    }

    /// Decisions one iteration asks for across all environments.
    pub fn steps_per_iteration(&self) -> u64 {
        self.scenarios.iter().map(|s| s.total_flows as u64 * self.rollout_len as u64).sum()
    }
}

/// One training scenario instance. It keeps running across iterations and
/// restarts once it has simulated `episode_ns`.
pub struct TrainEnv {
    pub index: u32,
    pub spec: ScenarioSpec,
    pub sim: Simulation,
    states: Vec<PolicyState>,
    episode: u64,
    base_seed: u64,
    initial_rate_range: [f64; 2],
}

/// What one environment produced in one iteration.
#[derive(Debug, Clone)]
pub struct Collected {
    pub replay: KeySeparatedReplay,
    pub decisions: u64,
    pub su: Option<f64>,
    pub fr: Option<f64>,
}

impl TrainEnv {
    pub fn new(index: u32, spec: ScenarioSpec, base_seed: u64, initial_rate_range: [f64; 2]) -> Result<Self, AdpgError> {
        let sim = Self::fresh(&spec, base_seed, index, 0, initial_rate_range)?;
        Ok(TrainEnv {
            index,
            spec,
            sim,
            states: Vec::new(),
            episode: 0,
            base_seed,
            initial_rate_range,
        })
    }

    fn fresh(spec: &ScenarioSpec, base_seed: u64, index: u32, episode: u64, range: [f64; 2]) -> Result<Simulation, AdpgError> {
        let seed = base_seed ^ ((index as u64) << 40) ^ episode.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut spec = spec.clone();
        spec.seed = rng.gen();
        spec.initial_rate_fraction = if range[0] < range[1] {
            range[0] * libm::pow(range[1] / range[0], rng.gen::<f64>())
        } else {
            range[0]
        };
        let topo = spec.build()?;
        let opts = SimOptions {
            seed: rng.gen(),
            ..SimOptions::default()
        };
        Ok(Simulation::new(topo, opts)?)
    }

    pub fn episode(&self) -> u64 {
        self.episode
    }

    fn restart(&mut self) -> Result<(), AdpgError> {
        self.episode += 1;
        self.sim = Self::fresh(&self.spec, self.base_seed, self.index, self.episode, self.initial_rate_range)?;
        self.states.clear();
        Ok(())
    }

    /// Run until every flow has (on average) taken `rollout_len` decisions.
    pub fn collect(&mut self, params: &PolicyParams, cfg: &TrainConfig) -> Result<Collected, AdpgError> {
        if self.sim.now().as_nanos() >= cfg.episode_ns {
            self.restart()?;
        }
        let quota = self.spec.total_flows as u64 * cfg.rollout_len as u64;
        let t0 = self.sim.now();
        let mut agent = AdpgAgent::new(params, cfg.obs.clone(), cfg.target)
            .recording(self.index)
            .with_states(core::mem::take(&mut self.states));
        while agent.decisions() < quota {
            if let Some(e) = agent.error() {
                return Err(e.clone());
            }
            if !self.sim.step(&mut agent)? {
                break;
            }
        }
        if let Some(e) = agent.error() {
            return Err(e.clone());
        }
        let decisions = agent.decisions();
        let (states, replay) = agent.into_parts();
        self.states = states;
        let window = MetricsWindow { from: t0, to: self.sim.now() };
        let m = compute_metrics(&self.sim, &self.spec, window).ok();
        Ok(Collected {
            replay,
            decisions,
            su: m.as_ref().map(|m| m.su_percent),
            fr: m.as_ref().map(|m| m.fr),
        })
    }
}

/// Runs the per-environment collection jobs; implementations may run them
/// in parallel but must return results in environment order.
pub trait CollectExecutor {
    fn run(&self, envs: &mut [TrainEnv], job: &(dyn Fn(&mut TrainEnv) -> Result<Collected, AdpgError> + Sync)) -> Vec<Result<Collected, AdpgError>>;
}

pub struct Sequential;

impl CollectExecutor for Sequential {
    fn run(&self, envs: &mut [TrainEnv], job: &(dyn Fn(&mut TrainEnv) -> Result<Collected, AdpgError> + Sync)) -> Vec<Result<Collected, AdpgError>> {
        envs.iter_mut().map(job).collect()
    }
}

/// One line of the learning curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub mean_reward: f64,
    pub mean_abs_coeff: f64,
    pub su: f64,
    pub fr: f64,
    /// Cumulative over the run.
    pub decision_steps: u64,
}

pub struct Trainer {
    pub cfg: TrainConfig,
    params: PolicyParams,
    opt: Optimizer,
    ema: Option<Vec<f64>>,
    envs: Vec<TrainEnv>,
    steps_used: u64,
    iteration: usize,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

impl Trainer {
    pub fn new(cfg: TrainConfig) -> Result<Self, AdpgError> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let params = PolicyParams::init_uniform(cfg.obs.dim(), cfg.init_scale as f32, &mut rng);
        Self::with_params(cfg, params)
    }

    /// Start from existing parameters instead of a random initialization.
    pub fn with_params(cfg: TrainConfig, params: PolicyParams) -> Result<Self, AdpgError> {
        cfg.validate()?;
        if params.layout.input != cfg.obs.dim() {
            return Err(crate::error::PolicyError::ShapeMismatch {
                expected: cfg.obs.dim(),
                got: params.layout.input,
            }
            .into());
        }
        let envs = cfg
            .scenarios
            .iter()
            .enumerate()
            .map(|(i, s)| TrainEnv::new(i as u32, s.clone(), cfg.seed, cfg.initial_rate_range))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Trainer {
            opt: Optimizer::new(cfg.optimizer, cfg.lr, params.len()),
            ema: cfg.param_ema.map(|_| params.data.iter().map(|&x| x as f64).collect()),
            params,
            envs,
            steps_used: 0,
            iteration: 0,
            cfg,
        })
    }

    /// Parameters the rollouts are collected with.
    pub fn params(&self) -> &PolicyParams {
        &self.params
    }

    /// The training result: the parameter average when one is kept.
    pub fn output_params(&self) -> PolicyParams {
        let mut p = self.params.clone();
        if let Some(avg) = &self.ema {
            p.data.iter_mut().zip(avg).for_each(|(d, &a)| *d = a as f32);
        }
        p
    }

    pub fn into_params(self) -> PolicyParams {
        self.output_params()
    }

    pub fn steps_used(&self) -> u64 {
        self.steps_used
    }

    /// Whether another iteration fits in the iteration count and step budget.
    pub fn can_continue(&self) -> bool {
        self.iteration < self.cfg.iterations && self.steps_used + self.cfg.steps_per_iteration() <= self.cfg.max_decision_steps
    }

    /// Collect, reduce and update once. The parameters are left untouched
    /// when the update would make them non-finite.
    pub fn iterate(&mut self, exec: &dyn CollectExecutor) -> Result<IterationRecord, AdpgError> {
        let params = &self.params;
        let cfg = &self.cfg;
        let job = |env: &mut TrainEnv| env.collect(params, cfg);
        let results = exec.run(&mut self.envs, &job);
        let mut parts = Vec::with_capacity(results.len());
        let (mut su, mut fr) = (Vec::new(), Vec::new());
        for r in results {
            let c = r?;
            self.steps_used += c.decisions;
            su.extend(c.su);
            fr.extend(c.fr);
            parts.push(c.replay);
        }
        let replay = KeySeparatedReplay::merge(parts);
        let (mut grads, stats) = adpg_gradient(&replay, &self.params, self.cfg.coeff_mode, self.cfg.bptt)?;
        self.iteration += 1;
        if let Some(clip) = self.cfg.grad_clip {
            let norm = libm::sqrt(grads.iter().map(|g| g * g).sum::<f64>());
            if norm > clip && norm > 0.0 {
                grads.iter_mut().for_each(|g| *g *= clip / norm);
            }
        }
        if let Some(end) = self.cfg.lr_final {
            let by_iter = (self.iteration - 1) as f64 / self.cfg.iterations as f64;
            let by_steps = self.steps_used as f64 / self.cfg.max_decision_steps.max(1) as f64;
            let progress = by_iter.max(by_steps).min(1.0);
            self.opt.lr = self.cfg.lr + (end - self.cfg.lr) * progress;
        }
        if stats.total_steps > 0 {
            self.opt
                .step(&mut self.params, &grads)
                .map_err(|_| AdpgError::Diverged { iteration: self.iteration })?;
        }
        if let (Some(avg), Some(d)) = (self.ema.as_mut(), self.cfg.param_ema) {
            avg.iter_mut().zip(&self.params.data).for_each(|(a, &x)| *a = d * *a + (1.0 - d) * x as f64);
        }
        Ok(IterationRecord {
            iteration: self.iteration,
            mean_reward: stats.mean_reward,
            mean_abs_coeff: stats.mean_abs_coeff,
            su: mean(su.into_iter()),
            fr: mean(fr.into_iter()),
            decision_steps: self.steps_used,
        })
    }

    /// Iterate until the iteration count or step budget runs out.
    pub fn run(&mut self, exec: &dyn CollectExecutor, mut on_iteration: impl FnMut(&IterationRecord)) -> Result<Vec<IterationRecord>, AdpgError> {
        let mut curve = Vec::new();
        while self.can_continue() {
            let rec = self.iterate(exec)?;
            on_iteration(&rec);
            curve.push(rec);
        }
        Ok(curve)
    }
}
