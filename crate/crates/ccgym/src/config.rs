//! TOML scenario, training and suite files.
//!
//! A scenario document is either a complete `ScenarioSpec` (recognised by a
//! `hosts` key) or a short form naming a family and a flow count:
//!
//! ```toml
//! kind = "many_to_one"
//! flows = 8
//! duration_ms = 20
//! seed = 3
//! ```
//!
//! Either form may carry `[dcqcn]`, `[hpcc]` and `[swift]` tables that
//! override baseline parameters.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use ccgym_core::adpg::TrainConfig;
use ccgym_core::cc::{DcqcnParams, HpccParams, SwiftParams};
use ccgym_core::scenario::{ScenarioKind, ScenarioSpec};
use ccgym_core::topology::NetworkConfig;
use serde::Deserialize;

use crate::run::Algo;

pub const DEFAULT_DURATION_MS: f64 = 20.0;

/// Baseline parameter overrides.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgoParams {
    pub dcqcn: DcqcnParams,
    pub hpcc: HpccParams,
    pub swift: SwiftParams,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShortScenario {
    kind: ScenarioKind,
    flows: u32,
    #[serde(default)]
    duration_ms: Option<f64>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    net: Option<NetworkConfig>,
    #[serde(default)]
    initial_rate_fraction: Option<f64>,
}

fn ms_to_ns(ms: f64) -> Result<u64> {
    if !(ms > 0.0 && ms.is_finite()) {
        bail!("duration must be a positive number of milliseconds, got {ms}");
    }
    Ok((ms * 1e6).round() as u64)
}

fn hosts_for_all_to_all(flows: u32) -> Result<u32> {
    (2..=flows.max(2))
        .find(|h| h * (h - 1) == flows)
        .ok_or_else(|| anyhow!("all-to-all needs h*(h-1) flows for some host count h; {flows} is not of that form"))
}

/// The family preset for `kind` with `flows` total flows.
pub fn preset(kind: ScenarioKind, flows: u32, duration_ns: u64, seed: u64) -> Result<ScenarioSpec> {
    Ok(match kind {
        ScenarioKind::ManyToOne => ScenarioSpec::many_to_one(flows, duration_ns, seed),
        ScenarioKind::AllToAll => ScenarioSpec::all_to_all(hosts_for_all_to_all(flows)?, duration_ns, seed),
        ScenarioKind::LongShort => ScenarioSpec::long_short(flows, duration_ns, seed),
    })
}

pub fn parse_kind(s: &str) -> Option<ScenarioKind> {
    match s {
        "many_to_one" => Some(ScenarioKind::ManyToOne),
        "all_to_all" => Some(ScenarioKind::AllToAll),
        "long_short" => Some(ScenarioKind::LongShort),
        _ => None,
    }
}

/// Resolve one scenario document into a spec and baseline overrides.
pub fn scenario_from_table(mut t: toml::Table) -> Result<(ScenarioSpec, AlgoParams)> {
    let mut overrides = toml::Table::new();
    for k in ["dcqcn", "hpcc", "swift"] {
        if let Some(v) = t.remove(k) {
            overrides.insert(k.into(), v);
        }
    }
    let params: AlgoParams = overrides.try_into().context("baseline parameters")?;
    let spec = if t.contains_key("hosts") {
        t.try_into::<ScenarioSpec>().context("scenario")?
    } else {
        let s: ShortScenario = t.try_into().context("scenario (short form)")?;
        let dur = ms_to_ns(s.duration_ms.unwrap_or(DEFAULT_DURATION_MS))?;
        let mut spec = preset(s.kind, s.flows, dur, s.seed)?;
        if let Some(n) = s.name {
            spec.name = n;
        }
        if let Some(net) = s.net {
            spec.net = net;
        }
        if let Some(f) = s.initial_rate_fraction {
            spec.initial_rate_fraction = f;
        }
        spec
    };
    Ok((spec, params))
}

pub fn read_table(path: &Path) -> Result<toml::Table> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn load_scenario(path: &Path) -> Result<(ScenarioSpec, AlgoParams)> {
    scenario_from_table(read_table(path)?).with_context(|| format!("in {}", path.display()))
}

/// Command-line changes to a scenario.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub flows: Option<u32>,
    pub seed: Option<u64>,
    pub duration_ms: Option<f64>,
}

impl Overrides {
    /// A new flow count or duration rebuilds the family preset, keeping the
    /// network block, start jitter, initial rate and short-flow size.
    pub fn apply(&self, spec: &ScenarioSpec) -> Result<ScenarioSpec> {
        let mut out = spec.clone();
        if let Some(s) = self.seed {
            out.seed = s;
        }
        if self.flows.is_none() && self.duration_ms.is_none() {
            return Ok(out);
        }
        let flows = self.flows.unwrap_or(spec.total_flows);
        let dur = match self.duration_ms {
            Some(ms) => ms_to_ns(ms)?,
            None => spec.duration_ns,
        };
        let mut fresh = preset(spec.kind, flows, dur, out.seed)?;
        if self.flows.is_none() {
            fresh.name = spec.name.clone();
        }
        fresh.net = spec.net.clone();
        fresh.start_jitter_ns = spec.start_jitter_ns;
        fresh.initial_rate_fraction = spec.initial_rate_fraction;
        if let (Some(new), Some(old)) = (fresh.interrupt.as_mut(), spec.interrupt.as_ref()) {
            new.short_bytes = old.short_bytes;
        }
        Ok(fresh)
    }
}

/// `--scenario` takes a file or a bare family name.
pub fn resolve_scenario(arg: Option<&str>, ov: &Overrides) -> Result<(ScenarioSpec, AlgoParams)> {
    let (spec, params) = match arg {
        None => (preset(ScenarioKind::ManyToOne, 4, ms_to_ns(DEFAULT_DURATION_MS)?, 0)?, AlgoParams::default()),
        Some(a) => match parse_kind(a) {
            Some(kind) if !Path::new(a).exists() => {
                let flows = match kind {
                    ScenarioKind::ManyToOne => 4,
                    ScenarioKind::AllToAll => 12,
                    ScenarioKind::LongShort => 2,
                };
                (preset(kind, flows, ms_to_ns(DEFAULT_DURATION_MS)?, 0)?, AlgoParams::default())
            }
            _ => load_scenario(Path::new(a))?,
        },
    };
    Ok((ov.apply(&spec)?, params))
}

/// A training file is a `TrainConfig` whose `scenarios` entries may use the
/// short scenario form.
pub fn train_config_from_table(mut t: toml::Table) -> Result<TrainConfig> {
    let scenarios = match t.remove("scenarios") {
        None => None,
        Some(toml::Value::Array(items)) => Some(
            items
                .into_iter()
                .enumerate()
                .map(|(i, v)| match v {
                    toml::Value::Table(tab) => scenario_from_table(tab).map(|(s, _)| s).with_context(|| format!("scenarios[{i}]")),
                    _ => bail!("scenarios[{i}] is not a table"),
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        Some(_) => bail!("scenarios must be an array of tables"),
    };
    let mut cfg: TrainConfig = t.try_into().context("training config")?;
    if let Some(s) = scenarios {
        cfg.scenarios = s;
    }
    cfg.validate().map_err(|e| anyhow!("training config: {e}"))?;
    Ok(cfg)
}

pub fn load_train_config(path: &Path) -> Result<TrainConfig> {
    train_config_from_table(read_table(path)?).with_context(|| format!("in {}", path.display()))
}

/// A benchmark suite: every scenario is run with every algorithm and seed.
#[derive(Debug, Clone)]
pub struct Suite {
    pub scenarios: Vec<ScenarioSpec>,
    pub algos: Vec<Algo>,
    pub seeds: Vec<u64>,
    /// Float or quantized checkpoint for `adpg` runs.
    pub checkpoint: Option<PathBuf>,
    pub target: f64,
    pub params: AlgoParams,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SuiteHead {
    algos: Vec<Algo>,
    seeds: Vec<u64>,
    #[serde(default)]
    checkpoint: Option<PathBuf>,
    #[serde(default = "default_target")]
    target: f64,
}

fn default_target() -> f64 {
    2.0
}

/// Parse a suite. A relative checkpoint path is taken relative to `base`.
pub fn suite_from_table(mut t: toml::Table, base: &Path) -> Result<Suite> {
    let mut overrides = toml::Table::new();
    for k in ["dcqcn", "hpcc", "swift"] {
        if let Some(v) = t.remove(k) {
            overrides.insert(k.into(), v);
        }
    }
    let params: AlgoParams = overrides.try_into().context("baseline parameters")?;
    let scenarios = match t.remove("scenarios") {
        Some(toml::Value::Array(items)) if !items.is_empty() => items
            .into_iter()
            .enumerate()
            .map(|(i, v)| match v {
                toml::Value::Table(tab) => scenario_from_table(tab).map(|(s, _)| s).with_context(|| format!("scenarios[{i}]")),
                toml::Value::String(p) => load_scenario(&base.join(p)).map(|(s, _)| s),
                _ => bail!("scenarios[{i}] must be a table or a file path"),
            })
            .collect::<Result<Vec<_>>>()?,
        _ => bail!("suite needs a non-empty scenarios array"),
    };
    let head: SuiteHead = t.try_into().context("suite")?;
    if head.algos.is_empty() || head.seeds.is_empty() {
        bail!("suite needs at least one algorithm and one seed");
    }
    if head.algos.contains(&Algo::Adpg) && head.checkpoint.is_none() {
        bail!("suite runs adpg but names no checkpoint");
    }
    Ok(Suite {
        scenarios,
        algos: head.algos,
        seeds: head.seeds,
        checkpoint: head.checkpoint.map(|p| if p.is_relative() { base.join(p) } else { p }),
        target: head.target,
        params,
    })
}

pub fn load_suite(path: &Path) -> Result<Suite> {
    let base = path.parent().unwrap_or(Path::new("."));
    suite_from_table(read_table(path)?, base).with_context(|| format!("in {}", path.display()))
}
