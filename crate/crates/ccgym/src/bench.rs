//! Benchmark suites: every (scenario, algorithm, seed) run, a CSV row per
//! run and a summary table per scenario.

use std::io::Write;
use std::time::{Duration, Instant};

use anyhow::Result;
use ccgym_core::metrics::{non_dominated, MetricsReport, SIMILARITY_BAND, WARMUP_FRACTION};
use ccgym_core::scenario::ScenarioSpec;
use rayon::prelude::*;

use crate::checkpoint::Checkpoint;
use crate::config::Suite;
use crate::run::{run_scenario, Algo, Controller};

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub spec: ScenarioSpec,
    pub algo: Algo,
    pub seed: u64,
    /// `Err` holds the failure message; the suite carries on.
    pub outcome: Result<MetricsReport, String>,
    pub wall: Duration,
}

/// Run the suite, in parallel when asked. Records come back in suite order
/// (scenario, then algorithm, then seed).
pub fn run_suite(suite: &Suite, parallel: bool) -> Result<Vec<RunRecord>> {
    let ck = suite.checkpoint.as_deref().map(Checkpoint::load).transpose()?;
    let mut jobs = Vec::new();
    for s in &suite.scenarios {
        for &a in &suite.algos {
            for &seed in &suite.seeds {
                jobs.push((s, a, seed));
            }
        }
    }
    let one = |&(s, algo, seed): &(&ScenarioSpec, Algo, u64)| {
        let mut spec = s.clone();
        spec.seed = seed;
        let t = Instant::now();
        let ctrl = Controller {
            algo,
            params: &suite.params,
            checkpoint: ck.as_ref(),
            target: suite.target,
        };
        let outcome = run_scenario(&spec, ctrl, false).map(|o| o.report).map_err(|e| format!("{e:#}"));
        if let Err(e) = &outcome {
            log::warn!("{} {} seed {}: {e}", spec.name, algo, seed);
        }
        RunRecord {
            spec,
            algo,
            seed,
            outcome,
            wall: t.elapsed(),
        }
    };
    Ok(if parallel {
        jobs.par_iter().map(one).collect()
    } else {
        jobs.iter().map(one).collect()
    })
}

pub const CSV_HEADER: [&str; 9] = ["scenario", "algo", "seed", "su", "fr", "ql_us", "dr_gbps", "recovery_s", "failed"];

fn recovery_field(r: Option<f64>) -> String {
    match r {
        None => String::new(),
        Some(x) if x.is_infinite() => "inf".into(),
        Some(x) => format!("{x:.6}"),
    }
}

/// One row per run. A run that errored is written with empty metrics and
/// `failed = true`.
pub fn write_csv(w: impl Write, records: &[RunRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in records {
        let seed = r.seed.to_string();
        let row: Vec<String> = match &r.outcome {
            Ok(m) => vec![
                r.spec.name.clone(),
                r.algo.to_string(),
                seed,
                format!("{:.3}", m.su_percent),
                format!("{:.3}", m.fr),
                format!("{:.3}", m.ql_us),
                format!("{:.3}", m.dr_gbps),
                recovery_field(m.recovery_time_s),
                m.failed.to_string(),
            ],
            Err(_) => vec![
                r.spec.name.clone(),
                r.algo.to_string(),
                seed,
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                "true".into(),
            ],
        };
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, var.sqrt())
}

/// Seed-aggregated results of one algorithm on one scenario.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub scenario: String,
    pub algo: Algo,
    pub runs: usize,
    pub errors: usize,
    pub failed: usize,
    /// Mean report over the seeds that completed.
    pub mean: Option<MetricsReport>,
    pub std: [f64; 4],
    pub non_dominated: bool,
}

pub fn summarize(records: &[RunRecord]) -> Result<Vec<SummaryRow>> {
    let mut rows: Vec<SummaryRow> = Vec::new();
    let mut i = 0;
    while i < records.len() {
        let (name, algo) = (&records[i].spec.name, records[i].algo);
        let j = i + records[i..].iter().take_while(|r| &r.spec.name == name && r.algo == algo).count();
        let group = &records[i..j];
        let ok: Vec<&MetricsReport> = group.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
        let col = |f: fn(&MetricsReport) -> f64| mean_std(&ok.iter().map(|m| f(m)).collect::<Vec<_>>());
        let (mean, std) = if ok.is_empty() {
            (None, [0.0; 4])
        } else {
            let (su, su_s) = col(|m| m.su_percent);
            let (fr, fr_s) = col(|m| m.fr);
            let (ql, ql_s) = col(|m| m.ql_us);
            let (dr, dr_s) = col(|m| m.dr_gbps);
            let rec: Vec<f64> = ok.iter().filter_map(|m| m.recovery_time_s).collect();
            let report = MetricsReport {
                scenario: name.clone(),
                su_percent: su,
                fr,
                ql_us: ql,
                dr_gbps: dr,
                recovery_time_s: (!rec.is_empty()).then(|| rec.iter().sum::<f64>() / rec.len() as f64),
                long_bw_percent: None,
                failed: ok.iter().any(|m| m.failed),
            };
            (Some(report), [su_s, fr_s, ql_s, dr_s])
        };
        rows.push(SummaryRow {
            scenario: name.clone(),
            algo,
            runs: group.len(),
            errors: group.len() - ok.len(),
            failed: ok.iter().filter(|m| m.failed).count(),
            mean,
            std,
            non_dominated: false,
        });
        i = j;
    }
    // Mark the Pareto front among algorithms within each scenario.
    let mut start = 0;
    while start < rows.len() {
        let end = start + rows[start..].iter().take_while(|r| r.scenario == rows[start].scenario).count();
        let idx: Vec<usize> = (start..end).filter(|&k| rows[k].mean.is_some()).collect();
        let reports: Vec<MetricsReport> = idx.iter().map(|&k| rows[k].mean.clone().unwrap()).collect();
        for f in non_dominated(&reports)? {
            rows[idx[f]].non_dominated = true;
        }
        start = end;
    }
    Ok(rows)
}

/// Aligned text table; `*` marks entries no other algorithm dominates on
/// the same scenario.
pub fn format_summary(rows: &[SummaryRow]) -> String {
    let mut out = format!(
        "# steady state after {:.0}% warm-up; domination band {SIMILARITY_BAND}; mean ± std over seeds\n",
        WARMUP_FRACTION * 100.0
    );
    let header = ["", "scenario", "algo", "runs", "SU %", "FR", "QL us", "DR Gbit/s", "recovery s", "failed"];
    let mut table: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for r in rows {
        let pm = |m: f64, s: f64| format!("{m:.1} ± {s:.1}");
        let mut line = vec![
            if r.non_dominated { "*".into() } else { String::new() },
            r.scenario.clone(),
            r.algo.to_string(),
            r.runs.to_string(),
        ];
        match &r.mean {
            Some(m) => {
                line.push(pm(m.su_percent, r.std[0]));
                line.push(pm(m.fr, r.std[1]));
                line.push(pm(m.ql_us, r.std[2]));
                line.push(format!("{:.3} ± {:.3}", m.dr_gbps, r.std[3]));
                line.push(match m.recovery_time_s {
                    None => "-".into(),
                    Some(x) if x.is_infinite() => "never".into(),
                    Some(x) => format!("{x:.6}"),
                });
            }
            None => line.extend(std::iter::repeat_n("-".to_string(), 5)),
        }
        line.push(if r.errors > 0 {
            format!("{} (+{} errors)", r.failed, r.errors)
        } else {
            r.failed.to_string()
        });
        table.push(line);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| table.iter().map(|l| l[c].chars().count()).max().unwrap_or(0))
        .collect();
    for l in &table {
        let cells: Vec<String> = l
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (s, &w))| {
                let pad = w - s.chars().count();
                if c <= 2 {
                    format!("{s}{}", " ".repeat(pad))
                } else {
                    format!("{}{s}", " ".repeat(pad))
                }
            })
            .collect();
        out += cells.join("  ").trim_end();
        out.push('\n');
    }
    out
}
