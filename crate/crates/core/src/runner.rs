//! Simulation loop and experiment orchestration.
//!
//! Each timestep runs `decide -> sample reward -> audit -> observe -> drift`,
//! so the reward at `t` is drawn at the means in force at `t`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Scenario};
use crate::env::EnvState;
use crate::error::{Error, Result};
use crate::hyperparams::Hyperparams;
use crate::metrics::{regret_bound_b, RunSummary, StepRecord, SummaryBuilder};
use crate::policy::{Policy, PolicyKind};
use crate::rng::{stream_rng, SimRng, Stream};
use crate::state::PolicyState;
use crate::trace::{keep_row, write_trace, TraceRow};

/// One replication: environment, policy, generators and running summary.
pub struct Simulation {
    hp: Hyperparams,
    env: EnvState,
    policy: Box<dyn Policy>,
    state: PolicyState,
    env_rng: SimRng,
    policy_rng: SimRng,
    t: u64,
    bound_b: f64,
    summary: SummaryBuilder,
}

impl Simulation {
    pub fn new(hp: Hyperparams, env: EnvState, policy: Box<dyn Policy>, seed: u64) -> Result<Self> {
        if env.num_arms() != hp.num_arms {
            return Err(Error::Constraint(format!(
                "environment has {} arms, hyperparameters expect {}",
                env.num_arms(),
                hp.num_arms
            )));
        }
        let bound_b = regret_bound_b(hp.num_arms, hp.horizon, hp.alpha);
        Ok(Simulation {
            state: PolicyState::new(hp.num_arms),
            summary: SummaryBuilder::with_capacity(hp.horizon as usize),
            env_rng: stream_rng(seed, Stream::Environment),
            policy_rng: stream_rng(seed, Stream::Policy),
            t: 1,
            bound_b,
            hp,
            env,
            policy,
        })
    }

    /// Builds the replication `(kappa, seed)` of `config`.
    pub fn from_config(config: &ExperimentConfig, kappa: f64, seed: u64) -> Result<Self> {
        let hp = config.hyperparams(kappa)?;
        let env = config.make_env(kappa, seed)?;
        let policy = config.policy.build(&hp);
        Simulation::new(hp, env, policy, seed)
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hp
    }

    pub fn env(&self) -> &EnvState {
        &self.env
    }

    pub fn state(&self) -> &PolicyState {
        &self.state
    }

    pub fn policy_name(&self) -> &'static str {
        self.policy.name()
    }

    /// Timestep the next call to [`Simulation::step`] will play.
    pub fn next_t(&self) -> u64 {
        self.t
    }

    pub fn is_done(&self) -> bool {
        self.t > self.hp.horizon
    }

    pub fn cumulative_regret(&self) -> f64 {
        self.summary.cumulative()
    }

    pub fn bound_b(&self) -> f64 {
        self.bound_b
    }

    /// Plays one timestep. Returns `None` after the horizon.
    pub fn step(&mut self) -> Result<Option<StepRecord>> {
        if self.is_done() {
            return Ok(None);
        }
        let t = self.t;
        let means = self.env.true_means();
        let decision = self.policy.decide(&self.state, t, &mut self.policy_rng);
        let reward = self.env.sample_reward(decision.chosen_arm, &mut self.env_rng)?;
        let rec = StepRecord::audit(decision, reward, means);
        self.summary.push_record(&rec);
        self.state.observe(rec.decision.chosen_arm, reward, t)?;
        self.env.drift_step(&mut self.env_rng);
        self.t += 1;
        Ok(Some(rec))
    }

    /// Plays to the horizon, handing every record and the running cumulative
    /// regret to `observer`.
    pub fn run<F: FnMut(&StepRecord, f64)>(mut self, mut observer: F) -> Result<RunSummary> {
        while let Some(rec) = self.step()? {
            observer(&rec, self.summary.cumulative());
        }
        self.finish()
    }

    pub fn finish(self) -> Result<RunSummary> {
        self.summary.finish(self.bound_b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: u64,
    pub cum_regret: f64,
    pub ratio: f64,
}

/// Per-replication entry of the JSON summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: Scenario,
    pub policy: PolicyKind,
    pub k: usize,
    pub horizon: u64,
    pub kappa: f64,
    pub seed: u64,
    pub hyperparams: Hyperparams,
    pub bound_b: f64,
    pub final_regret: f64,
    pub final_ratio: f64,
    pub max_ratio: f64,
    pub fairness_violations: usize,
    pub coverage_violations: usize,
    pub fairness_failure: bool,
    pub coverage_failure: bool,
    pub trace_file: Option<String>,
    /// Regret curve at the trace thinning stride.
    pub curve: Vec<CurvePoint>,
}

/// One row per kappa, aggregated over replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaRow {
    pub kappa: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub delta: f64,
    pub runs: usize,
    pub mean_final_regret: f64,
    pub mean_final_ratio: f64,
    pub max_ratio: f64,
    pub coverage_failure_rate: f64,
    pub fairness_failure_rate: f64,
}

pub const SWEEP_COLUMNS: [&str; 10] = [
    "kappa",
    "epsilon",
    "alpha",
    "delta",
    "runs",
    "mean_final_regret",
    "mean_final_ratio",
    "max_ratio",
    "coverage_failure_rate",
    "fairness_failure_rate",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub runs: Vec<RunRecord>,
    pub per_kappa: Vec<KappaRow>,
}

/// Result of one replication before it is written anywhere.
pub struct ReplicationOutput {
    pub record: RunRecord,
    pub rows: Vec<TraceRow>,
    pub summary: RunSummary,
}

fn trace_name(config: &ExperimentConfig, kappa: f64, seed: u64) -> String {
    format!("trace_{}_kappa{}_seed{}.{}", config.policy, kappa, seed, config.output.format.extension())
}

/// Runs one `(kappa, seed)` replication in memory.
pub fn run_replication(config: &ExperimentConfig, kappa: f64, seed: u64) -> Result<ReplicationOutput> {
    let sim = Simulation::from_config(config, kappa, seed)?;
    let hp = sim.hyperparams().clone();
    let out = &config.output;
    let mut rows = Vec::new();
    let summary = sim.run(|rec, cum| {
        let violation = rec.fairness_violation || rec.coverage_violation;
        if keep_row(rec.t, config.horizon, out.thin, violation) {
            rows.push(TraceRow::from_record(rec, cum, out.intervals));
        }
    })?;

    let thin = out.thin.max(1) as usize;
    let mut curve: Vec<CurvePoint> = summary
        .cum_regret_curve
        .iter()
        .zip(&summary.ratio_curve)
        .enumerate()
        .filter(|(i, _)| (i + 1) % thin == 0 || *i == 0)
        .map(|(i, (&c, &r))| CurvePoint { t: i as u64 + 1, cum_regret: c, ratio: r })
        .collect();
    if curve.last().map(|p| p.t) != Some(config.horizon) {
        curve.push(CurvePoint { t: config.horizon, cum_regret: summary.final_regret(), ratio: summary.final_ratio() });
    }

    let record = RunRecord {
        scenario: config.scenario,
        policy: config.policy,
        k: config.k,
        horizon: config.horizon,
        kappa,
        seed,
        hyperparams: hp,
        bound_b: summary.bound_b,
        final_regret: summary.final_regret(),
        final_ratio: summary.final_ratio(),
        max_ratio: summary.max_ratio(),
        fairness_violations: summary.fairness_violations,
        coverage_violations: summary.coverage_violations,
        fairness_failure: summary.fairness_failure,
        coverage_failure: summary.coverage_failure,
        trace_file: config.output.dir.as_ref().map(|_| trace_name(config, kappa, seed)),
        curve,
    };
    Ok(ReplicationOutput { record, rows, summary })
}

fn aggregate(config: &ExperimentConfig, runs: &[RunRecord]) -> Vec<KappaRow> {
    config
        .kappas
        .iter()
        .map(|&kappa| {
            let group: Vec<&RunRecord> = runs.iter().filter(|r| r.kappa == kappa).collect();
            let n = group.len().max(1) as f64;
            let hp = &group[0].hyperparams;
            KappaRow {
                kappa,
                epsilon: hp.epsilon,
                alpha: hp.alpha,
                delta: hp.delta(),
                runs: group.len(),
                mean_final_regret: group.iter().map(|r| r.final_regret).sum::<f64>() / n,
                mean_final_ratio: group.iter().map(|r| r.final_ratio).sum::<f64>() / n,
                max_ratio: group.iter().map(|r| r.max_ratio).fold(0.0, f64::max),
                coverage_failure_rate: group.iter().filter(|r| r.coverage_failure).count() as f64 / n,
                fairness_failure_rate: group.iter().filter(|r| r.fairness_failure).count() as f64 / n,
            }
        })
        .collect()
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Runs every `(kappa, seed)` job in parallel. When an output directory is
/// configured, writes one trace per job plus `summary.json`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    if let Some(dir) = &config.output.dir {
        fs::create_dir_all(dir)?;
    }
    let jobs = config.jobs();
    let runs = jobs
        .par_iter()
        .map(|&(kappa, seed)| {
            let out = run_replication(config, kappa, seed)?;
            if let Some(dir) = &config.output.dir {
                let path = dir.join(trace_name(config, kappa, seed));
                write_file(&path, |w| write_trace(w, &out.rows, config.output.format))?;
            }
            Ok(out.record)
        })
        .collect::<Result<Vec<RunRecord>>>()?;

    let report = ExperimentReport { per_kappa: aggregate(config, &runs), config: config.clone(), runs };
    if let Some(dir) = &config.output.dir {
        write_file(&dir.join("summary.json"), |w| {
            serde_json::to_writer_pretty(&mut *w, &report)?;
            w.write_all(b"\n")?;
            Ok(())
        })?;
    }
    Ok(report)
}

/// [`run_experiment`] over every kappa, returning one row per kappa. With an
/// output directory the table is also written to `sweep.csv`.
pub fn sweep(config: &ExperimentConfig) -> Result<Vec<KappaRow>> {
    if config.kappas.is_empty() {
        return Err(Error::Parse("sweep needs at least one kappa".into()));
    }
    let report = run_experiment(config)?;
    if let Some(dir) = &config.output.dir {
        let path: PathBuf = dir.join("sweep.csv");
        write_file(&path, |w| write_sweep_csv(w, &report.per_kappa))?;
    }
    Ok(report.per_kappa)
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[KappaRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.kappa.to_string(),
            r.epsilon.to_string(),
            r.alpha.to_string(),
            r.delta.to_string(),
            r.runs.to_string(),
            r.mean_final_regret.to_string(),
            r.mean_final_ratio.to_string(),
            r.max_ratio.to_string(),
            r.coverage_failure_rate.to_string(),
            r.fairness_failure_rate.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
