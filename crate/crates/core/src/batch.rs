//! Seed batches, protocol comparisons and parameter sweeps.
//!
//! Seeds run on a bounded rayon pool. Results always come back in the order
//! the seeds were given, whatever the pool size.

use std::fmt::Write as _;

use rayon::prelude::*;
use rayon::ThreadPoolBuilder;

use crate::analytics::{aggregate, MetricsReport, Summary};
use crate::engine::{run_with, RunOptions, RunOutput};
use crate::error::{Error, Result};
use crate::scenario::{ProtocolKind, Scenario};

/// Environment variable naming the worker count.
pub const WORKERS_ENV: &str = "GCNSIM_WORKERS";

/// Worker count from [`WORKERS_ENV`], or `None` for rayon's default.
pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BatchOptions {
    pub run: RunOptions,
    pub workers: Option<usize>,
}

pub fn run_seeds(scenario: &Scenario, seeds: &[u64], options: BatchOptions) -> Result<Vec<RunOutput>> {
    if seeds.is_empty() {
        return Err(Error::Config("seed list is empty".into()));
    }
    scenario.validated()?;
    let job = || {
        seeds
            .par_iter()
            .map(|&seed| run_with(scenario, seed, options.run))
            .collect::<Result<Vec<_>>>()
    };
    match options.workers {
        None => job(),
        Some(n) => ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?
            .install(job),
    }
}

pub fn reports(outputs: &[RunOutput]) -> Vec<MetricsReport> {
    outputs.iter().map(|o| o.report.clone()).collect()
}

#[derive(Debug, Clone)]
pub struct ProtocolResult {
    pub protocol: ProtocolKind,
    pub reports: Vec<MetricsReport>,
    pub summary: Summary,
}

/// Runs each protocol over the same seeds. Placement and motion depend only
/// on the seed, so every protocol sees the same worlds.
pub fn compare(
    scenario: &Scenario,
    protocols: &[ProtocolKind],
    seeds: &[u64],
    options: BatchOptions,
) -> Result<Vec<ProtocolResult>> {
    protocols
        .iter()
        .map(|&protocol| {
            let mut s = scenario.clone();
            s.protocol = protocol;
            let reports = reports(&run_seeds(&s, seeds, options)?);
            let summary = aggregate(&reports);
            Ok(ProtocolResult { protocol, reports, summary })
        })
        .collect()
}

/// Side-by-side table: one row per metric, one `mean` column per protocol.
pub fn comparison_csv(results: &[ProtocolResult]) -> String {
    let mut metrics: Vec<&String> = Vec::new();
    for r in results {
        for k in r.summary.keys() {
            if !metrics.contains(&k) {
                metrics.push(k);
            }
        }
    }
    metrics.sort();
    let mut out = String::from("metric");
    for r in results {
        let _ = write!(out, ",{}", r.protocol.name());
    }
    out.push('\n');
    for m in metrics {
        out.push_str(m);
        for r in results {
            match r.summary.get(m) {
                Some(s) => {
                    let _ = write!(out, ",{}", s.mean);
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: String,
    pub report: MetricsReport,
}

pub fn sweep(
    scenario: &Scenario,
    param: &str,
    values: &[String],
    seeds: &[u64],
    options: BatchOptions,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for value in values {
        let mut s = scenario.clone();
        s.set_param(param, value)?;
        for out in run_seeds(&s, seeds, options)? {
            rows.push(SweepRow {
                value: value.clone(),
                report: out.report,
            });
        }
    }
    Ok(rows)
}

/// Long format: `param,value,seed,metric,metric_value`.
pub fn sweep_csv(param: &str, rows: &[SweepRow]) -> String {
    let mut out = String::from("param,value,seed,metric,metric_value\n");
    for row in rows {
        for (name, v) in row.report.scalars() {
            let _ = writeln!(out, "{param},{},{},{name},{v}", row.value, row.report.seed);
        }
    }
    out
}
