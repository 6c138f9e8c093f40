//! Fair-UCBe: a fair bandit policy for slowly drifting rewards, with the
//! baselines, environments, audits and numerical checks around it.

pub mod active_set;
pub mod config;
pub mod env;
pub mod error;
pub mod hyperparams;
pub mod interval;
pub mod metrics;
pub mod oracles;
pub mod policy;
pub mod rng;
pub mod runner;
pub mod state;
pub mod trace;

pub use active_set::{build_active_set, ActiveSet};
pub use config::{load_config, load_config_path, ExperimentConfig, Scenario, TraceFormat};
pub use env::{make_drifting_env, make_opposing_env, make_stationary_env, DriftModel, EnvState};
pub use error::{Error, Result};
pub use hyperparams::{derive_hyperparams, epsilon_floor, Hyperparams, Overrides};
pub use interval::{build_intervals, confidence_radius, window_length, ConfidenceInterval};
pub use metrics::{
    coverage_audit, fairness_audit, instantaneous_regret, regret_bound_b, regret_bound_theorem, summarize,
    RunSummary, StepRecord,
};
pub use policy::{decision_distribution, Decision, FairBandits, FairUcbe, Policy, PolicyKind, Ucb1};
pub use rng::{stream_rng, SimRng, Stream};
pub use runner::{run_experiment, run_replication, sweep, ExperimentReport, KappaRow, RunRecord, Simulation};
pub use state::{PolicyState, SampleBuffer};
