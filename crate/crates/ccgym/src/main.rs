use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ccgym::bench::{format_summary, run_suite, summarize, write_csv, RunRecord};
use ccgym::checkpoint::Checkpoint;
use ccgym::config::{load_suite, load_train_config, resolve_scenario, AlgoParams, Overrides, Suite};
use ccgym::probe::action_deviation;
use ccgym::run::{run_scenario, trace_digest, write_trace, Algo, Controller};
use ccgym::train::{curve_line, train, write_curve, CURVE_HEADER};

#[derive(Parser)]
#[command(name = "ccgym", version, about = "Datacenter congestion-control simulator, trainer and benchmark harness")]
struct Cli {
    /// Worker threads for parallel runs (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Default)]
struct ScenarioArgs {
    /// Scenario file, or one of many_to_one, all_to_all, long_short.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    flows: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "duration-ms")]
    duration_ms: Option<f64>,
}

impl ScenarioArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            flows: self.flows,
            seed: self.seed,
            duration_ms: self.duration_ms,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a policy and write its checkpoint and learning curve.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Learning-curve CSV; defaults to `<out>.curve.csv`.
        #[arg(long)]
        curve: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's reward target.
        #[arg(long)]
        target: Option<f64>,
        /// Only `adpg` is trainable.
        #[arg(long, default_value = "adpg")]
        algo: Algo,
        /// Collect environments one after another instead of in parallel.
        #[arg(long)]
        sequential: bool,
    },
    /// Run one scenario and report its metrics.
    Eval {
        #[command(flatten)]
        sc: ScenarioArgs,
        #[arg(long, default_value = "adpg")]
        algo: Algo,
        #[arg(long)]
        ckpt: Option<PathBuf>,
        /// CSV report with the bench schema.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write the per-event trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 2.0)]
        target: f64,
    },
    /// Run a suite of scenarios, algorithms and seeds.
    Bench {
        #[arg(long)]
        suite: Option<PathBuf>,
        /// Scenario files or family names; replaces the suite's list.
        #[arg(long = "scenario")]
        scenarios: Vec<String>,
        #[arg(long)]
        flows: Option<u32>,
        /// Replaces the suite's seeds.
        #[arg(long = "seed")]
        seeds: Vec<u64>,
        #[arg(long = "duration-ms")]
        duration_ms: Option<f64>,
        /// Replaces the suite's algorithms.
        #[arg(long = "algo")]
        algos: Vec<Algo>,
        #[arg(long)]
        ckpt: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        sequential: bool,
    },
    /// Write the int8 version of a float checkpoint.
    Quantize {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Compare actions on this many random observations.
        #[arg(long, default_value_t = 1000)]
        check: usize,
    },
    Policy {
        #[command(subcommand)]
        cmd: PolicyCmd,
    },
}

#[derive(Subcommand)]
enum PolicyCmd {
    /// Print tensor shapes and norms.
    Inspect { ckpt: PathBuf },
}

fn create(path: &PathBuf) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.cmd {
        Cmd::Train {
            config,
            out,
            curve,
            seed,
            target,
            algo,
            sequential,
        } => {
            if algo != Algo::Adpg {
                bail!("only adpg can be trained, not {algo}");
            }
            let mut cfg = load_train_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = target {
                cfg.target = t;
            }
            let curve_path = curve.unwrap_or_else(|| {
                let mut p = out.clone().into_os_string();
                p.push(".curve.csv");
                p.into()
            });
            log::info!(
                "training: target {} lr {} T {} budget {} steps",
                cfg.target,
                cfg.lr,
                cfg.rollout_len,
                cfg.max_decision_steps
            );
            let res = train(cfg, !sequential, |r| log::debug!("{}", curve_line(r)))?;
            if let Some(last) = res.curve.last() {
                log::info!("{CURVE_HEADER}");
                log::info!("{}", curve_line(last));
            }
            res.checkpoint.save(&out)?;
            let mut w = create(&curve_path)?;
            write_curve(&mut w, &res.curve)?;
            w.flush()?;
            log::info!("wrote {} and {}", out.display(), curve_path.display());
            if let Some(e) = res.error {
                bail!("training stopped after {} iterations: {e}; kept the last good parameters", res.curve.len());
            }
        }
        Cmd::Eval {
            sc,
            algo,
            ckpt,
            report,
            trace,
            target,
        } => {
            let (spec, params) = resolve_scenario(sc.scenario.as_deref(), &sc.overrides())?;
            let ck = match (&ckpt, algo) {
                (Some(p), _) => Some(Checkpoint::load(p)?),
                (None, Algo::Adpg) => bail!("--algo adpg needs --ckpt"),
                (None, _) => None,
            };
            let ctrl = Controller {
                algo,
                params: &params,
                checkpoint: ck.as_ref(),
                target,
            };
            let t = std::time::Instant::now();
            let out = run_scenario(&spec, ctrl, trace.is_some())?;
            let m = &out.report;
            println!(
                "{} {} seed {}: su {:.2} fr {:.2} ql_us {:.3} dr_gbps {:.3} recovery_s {} failed {} ({} events, {:.2?})",
                spec.name,
                algo,
                spec.seed,
                m.su_percent,
                m.fr,
                m.ql_us,
                m.dr_gbps,
                m.recovery_time_s.map_or("-".into(), |r| format!("{r:.6}")),
                m.failed,
                out.events,
                t.elapsed()
            );
            if let (Some(path), Some(tr)) = (&trace, &out.trace) {
                let mut w = create(path)?;
                write_trace(&mut w, tr)?;
                w.flush()?;
                println!("trace: {} lines, sha256 {}", tr.len(), trace_digest(tr));
            }
            if let Some(path) = report {
                let rec = RunRecord {
                    spec: spec.clone(),
                    algo,
                    seed: spec.seed,
                    outcome: Ok(out.report),
                    wall: t.elapsed(),
                };
                write_csv(create(&path)?, &[rec])?;
            }
        }
        Cmd::Bench {
            suite,
            scenarios,
            flows,
            seeds,
            duration_ms,
            algos,
            ckpt,
            out,
            sequential,
        } => {
            let mut s = match &suite {
                Some(p) => load_suite(p)?,
                None => Suite {
                    scenarios: Vec::new(),
                    algos: vec![Algo::Dcqcn, Algo::Hpcc, Algo::Swift],
                    seeds: vec![0],
                    checkpoint: None,
                    target: 2.0,
                    params: AlgoParams::default(),
                },
            };
            let ov = Overrides {
                flows,
                seed: None,
                duration_ms,
            };
            if !scenarios.is_empty() {
                s.scenarios = scenarios
                    .iter()
                    .map(|a| resolve_scenario(Some(a), &ov).map(|(sp, _)| sp))
                    .collect::<Result<_>>()?;
            } else {
                s.scenarios = s.scenarios.iter().map(|sp| ov.apply(sp)).collect::<Result<_>>()?;
            }
            if s.scenarios.is_empty() {
                bail!("no scenarios: pass --suite or --scenario");
            }
            if !seeds.is_empty() {
                s.seeds = seeds;
            }
            if !algos.is_empty() {
                s.algos = algos;
            }
            if ckpt.is_some() {
                s.checkpoint = ckpt;
            }
            if s.algos.contains(&Algo::Adpg) && s.checkpoint.is_none() {
                bail!("adpg runs need a checkpoint (--ckpt or suite `checkpoint`)");
            }
            let records = run_suite(&s, !sequential)?;
            match &out {
                Some(p) => write_csv(create(p)?, &records)?,
                None => write_csv(std::io::stdout().lock(), &records)?,
            }
            print!("{}", format_summary(&summarize(&records)?));
        }
        Cmd::Quantize { ckpt, out, check } => {
            let ck = Checkpoint::load(&ckpt)?;
            let q = ck.quantize()?;
            q.save(&out)?;
            if let (Checkpoint::Float { params, obs }, Checkpoint::Int8 { policy, .. }) = (&ck, &q) {
                if check > 0 {
                    let d = action_deviation(params, policy, obs, check, 0)?;
                    println!("mean |action difference| over {check} random observations: {d:.6}");
                }
            }
            println!("wrote {}", out.display());
        }
        Cmd::Policy {
            cmd: PolicyCmd::Inspect { ckpt },
        } => {
            print!("{}", Checkpoint::load(&ckpt)?.describe());
        }
    }
    Ok(())
}
