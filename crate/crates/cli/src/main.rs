use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fair_ucbe::config::{parse_raw, Number, OneOrMany, RawConfig, RawOutput};
use fair_ucbe::oracles::lemma_suite;
use fair_ucbe::runner::write_sweep_csv;
use fair_ucbe::trace::{audit_rows, read_trace_file};
use fair_ucbe::{derive_hyperparams, run_experiment, sweep, Error, ExperimentConfig, Overrides, PolicyKind};
use fair_ucbe::{Scenario, TraceFormat};

#[derive(Parser)]
#[command(name = "fair-ucbe", version, about = "Fair-UCBe bandit simulations and audits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (kappa, seed) replication and write traces plus summary.json.
    Run(ExperimentArgs),
    /// Run a kappa sweep and print (and optionally write) one row per kappa.
    Sweep(ExperimentArgs),
    /// Run the numerical checks and print one JSON report per line.
    CheckLemmas(CheckArgs),
    /// Re-check a trace file and print a JSON report.
    Audit(AuditArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML configuration; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long)]
    policy: Option<PolicyKind>,
    #[arg(long)]
    k: Option<u64>,
    /// Horizon T; accepts forms like 1e5.
    #[arg(long, short = 'T')]
    horizon: Option<f64>,
    /// One kappa or a comma separated list.
    #[arg(long, value_delimiter = ',')]
    kappa: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    delta2: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    /// Use epsilon = kappa / 3 when the strict constraints are infeasible.
    #[arg(long)]
    relax_epsilon: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<TraceFormat>,
    #[arg(long)]
    thin: Option<u64>,
    /// Include per-arm bounds and true means in trace rows.
    #[arg(long)]
    intervals: bool,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, short = 'T', default_value_t = 1e4)]
    horizon: f64,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 2.0)]
    kappa: f64,
    #[arg(long, default_value_t = 1000)]
    reps: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct AuditArgs {
    trace: PathBuf,
    /// Override format detection from the file extension.
    #[arg(long)]
    format: Option<TraceFormat>,
}

fn horizon_number(h: f64) -> Number {
    if h.fract() == 0.0 && h.abs() < 9e15 {
        Number::Int(h as i64)
    } else {
        Number::Float(h)
    }
}

impl ExperimentArgs {
    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let base = match &self.config {
            Some(p) => parse_raw(&std::fs::read_to_string(p)?)?,
            None => RawConfig::default(),
        };
        let output = RawOutput {
            dir: self.out.clone(),
            format: self.format,
            thin: self.thin,
            intervals: self.intervals.then_some(true),
        };
        let flags = RawConfig {
            scenario: self.scenario,
            policy: self.policy,
            k: self.k.map(|k| Number::Int(k as i64)),
            horizon: self.horizon.map(horizon_number),
            kappa: self.kappa.clone().map(|v| OneOrMany::Many(v.into_iter().map(Number::Float).collect())),
            seed: self.seed,
            seeds: self.seed.map(|s| vec![s]),
            replications: self.reps,
            epsilon: self.epsilon,
            alpha: self.alpha,
            delta2: self.delta2,
            nu: self.nu,
            relax_epsilon: self.relax_epsilon.then_some(true),
            output: Some(output),
            ..RawConfig::default()
        };
        ExperimentConfig::from_raw(base.merge(flags))
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_constraint() {
        2
    } else {
        1
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), Error> {
    let mut out = io::stdout().lock();
    serde_json::to_writer(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Run(args) => {
            let config = args.resolve()?;
            let report = run_experiment(&config)?;
            print_json(&report.per_kappa)?;
            Ok(0)
        }
        Command::Sweep(args) => {
            let config = args.resolve()?;
            let rows = sweep(&config)?;
            write_sweep_csv(io::stdout().lock(), &rows)?;
            Ok(0)
        }
        Command::CheckLemmas(args) => {
            let hp = derive_hyperparams(horizon_count(args.horizon)?, args.kappa, args.k, &Overrides::default())?;
            let reports = lemma_suite(&hp, args.reps, args.seed)?;
            for r in &reports {
                print_json(r)?;
            }
            Ok(if reports.iter().all(|r| r.passed) { 0 } else { 2 })
        }
        Command::Audit(args) => {
            let rows = read_trace_file(&args.trace, args.format)?;
            let report = audit_rows(&rows);
            print_json(&report)?;
            Ok(if report.ok { 0 } else { 2 })
        }
    }
}

fn horizon_count(h: f64) -> Result<u64, Error> {
    if !(h >= 2.0) || h.fract() != 0.0 {
        return Err(Error::InvalidHorizon(h));
    }
    Ok(h as u64)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
