use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use gcnsim::analytics::{aggregate, connectivity_csv, reports_csv, summary_json};
use gcnsim::batch::{self, BatchOptions, WORKERS_ENV};
use gcnsim::presets::{self, Preset};
use gcnsim::trace::to_lines;
use gcnsim::{Error, ProtocolKind, RunOptions, Scenario};

#[derive(Parser)]
#[command(name = "gcnsim", version, about = "Group-centric networking simulator")]
struct Cli {
    /// Worker threads for seed batches.
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file over a set of seeds.
    Run {
        file: PathBuf,
        /// `a..b` (end exclusive), `a..=b`, or a comma list. Defaults to the
        /// scenario's own seeds.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        out: PathBuf,
        /// Also write one event trace per seed.
        #[arg(long)]
        trace: bool,
    },
    /// Run a preset under several protocols on identical worlds.
    Compare {
        preset: String,
        #[arg(long, default_value = "gcn,smf")]
        protocols: String,
        #[arg(long)]
        seeds: Option<String>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Vary one scenario parameter of a preset.
    Sweep {
        preset: String,
        /// Dotted JSON field name, e.g. `source_ttl` or `channel.base_loss`.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run presets and test their expected values; exits 1 on any miss.
    Check {
        /// Preset name, or `all`.
        preset: String,
        #[arg(long)]
        seeds: Option<String>,
    },
    /// List the shipped presets.
    Presets,
    /// Print a preset's scenario as JSON, ready for `run`.
    Show { preset: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    if cli.workers == Some(0) {
        bail!("--workers must be positive");
    }
    let options = BatchOptions {
        run: RunOptions::default(),
        workers: cli.workers,
    };
    match cli.command {
        Command::Run { file, seeds, out, trace } => cmd_run(&file, seeds.as_deref(), &out, trace, options),
        Command::Compare { preset, protocols, seeds, out } => {
            cmd_compare(&preset, &protocols, seeds.as_deref(), out.as_deref(), options)
        }
        Command::Sweep { preset, param, values, seeds, out } => {
            cmd_sweep(&preset, &param, &values, seeds.as_deref(), out.as_deref(), options)
        }
        Command::Check { preset, seeds } => cmd_check(&preset, seeds.as_deref(), options),
        Command::Presets => {
            for p in presets::all() {
                println!("{:<20} {}", p.name, p.description);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Show { preset } => {
            println!("{}", find_preset(&preset)?.scenario.to_json());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn find_preset(name: &str) -> Result<Preset> {
    presets::find(name).with_context(|| {
        let names: Vec<String> = presets::all().into_iter().map(|p| p.name).collect();
        format!("unknown preset {name:?}; known: {}", names.join(", "))
    })
}

/// Parses `a..b`, `a..=b` or `a,b,c`.
fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let spec = spec.trim();
    let seeds: Vec<u64> = if let Some((a, b)) = spec.split_once("..=") {
        (a.trim().parse()?..=b.trim().parse()?).collect()
    } else if let Some((a, b)) = spec.split_once("..") {
        (a.trim().parse()?..b.trim().parse()?).collect()
    } else if spec.is_empty() {
        Vec::new()
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<u64>().with_context(|| format!("bad seed {s:?}")))
            .collect::<Result<_>>()?
    };
    if seeds.is_empty() {
        bail!("seed list {spec:?} is empty");
    }
    Ok(seeds)
}

fn seeds_for(scenario: &Scenario, spec: Option<&str>) -> Result<Vec<u64>> {
    match spec {
        Some(s) => parse_seeds(s),
        None if scenario.seeds.is_empty() => bail!("scenario lists no seeds"),
        None => Ok(scenario.seeds.clone()),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_run(file: &Path, seeds: Option<&str>, out: &Path, trace: bool, mut options: BatchOptions) -> Result<ExitCode> {
    let scenario = match Scenario::load(file).and_then(|s| s.validated().map(|_| s)) {
        Ok(s) => s,
        Err(Error::InvalidScenario(violations)) => {
            eprintln!("{}: invalid scenario", file.display());
            for v in violations {
                eprintln!("  {v}");
            }
            return Ok(ExitCode::from(1));
        }
        Err(e) => {
            eprintln!("{e}");
            return Ok(ExitCode::from(1));
        }
    };
    let seeds = seeds_for(&scenario, seeds)?;
    options.run.keep_trace = trace;
    let outputs = batch::run_seeds(&scenario, &seeds, options)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let reports = batch::reports(&outputs);
    write(&out.join("per_seed.csv"), &reports_csv(&reports))?;
    write(&out.join("connectivity.csv"), &connectivity_csv(&reports))?;
    write(&out.join("summary.json"), &summary_json(&aggregate(&reports)))?;
    if trace {
        for o in &outputs {
            write(&out.join(format!("trace_seed{}.csv", o.report.seed)), &to_lines(&o.trace))?;
        }
    }
    eprintln!("{} seeds written to {}", seeds.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(
    preset: &str,
    protocols: &str,
    seeds: Option<&str>,
    out: Option<&Path>,
    options: BatchOptions,
) -> Result<ExitCode> {
    let preset = find_preset(preset)?;
    let protocols: Vec<ProtocolKind> = protocols
        .split(',')
        .map(|p| p.trim().parse::<ProtocolKind>())
        .collect::<Result<_, _>>()
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let seeds = seeds_for(&preset.scenario, seeds)?;
    let results = batch::compare(&preset.scenario, &protocols, &seeds, options)?;
    emit(out, &batch::comparison_csv(&results))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(
    preset: &str,
    param: &str,
    values: &[String],
    seeds: Option<&str>,
    out: Option<&Path>,
    options: BatchOptions,
) -> Result<ExitCode> {
    let preset = find_preset(preset)?;
    let seeds = seeds_for(&preset.scenario, seeds)?;
    let rows = batch::sweep(&preset.scenario, param, values, &seeds, options)?;
    emit(out, &batch::sweep_csv(param, &rows))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(name: &str, seeds: Option<&str>, options: BatchOptions) -> Result<ExitCode> {
    let selected = if name == "all" {
        presets::all()
    } else {
        vec![find_preset(name)?]
    };
    let mut ok = true;
    for preset in selected {
        let seeds = seeds_for(&preset.scenario, seeds)?;
        let reports = batch::reports(&batch::run_seeds(&preset.scenario, &seeds, options)?);
        for r in preset.evaluate(&aggregate(&reports)) {
            ok &= r.passed;
            let mean = r.mean.map_or("missing".to_string(), |m| format!("{m:.4}"));
            println!(
                "{} {} {} = {} ({:?})",
                if r.passed { "PASS" } else { "FAIL" },
                preset.name,
                r.metric,
                mean,
                r.check
            );
        }
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
