//! Experiment configuration: a TOML document (or CLI flags) resolved into a
//! validated [`ExperimentConfig`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::env::{
    make_drifting_env, make_opposing_env, make_stationary_env, DriftModel, EnvState, DEFAULT_CONCENTRATION,
    DEFAULT_PERSISTENCE,
};
use crate::error::{Error, Result};
use crate::hyperparams::{derive_hyperparams, Hyperparams, Overrides};
use crate::policy::PolicyKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// k drifting-beta arms (10 by default) with persistent random-walk drift.
    Drift10,
    /// Two arms moving toward each other by the full allowance every step.
    Opposing2,
    /// Uniform initial means that never move.
    Stationary,
    /// Explicit initial means and drift model.
    Custom,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Drift10 => "drift10",
            Scenario::Opposing2 => "opposing2",
            Scenario::Stationary => "stationary",
            Scenario::Custom => "custom",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "drift10" => Ok(Scenario::Drift10),
            "opposing2" => Ok(Scenario::Opposing2),
            "stationary" => Ok(Scenario::Stationary),
            "custom" => Ok(Scenario::Custom),
            other => Err(Error::Parse(format!("unknown scenario '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceFormat {
    #[default]
    Csv,
    /// One JSON object per line.
    Json,
}

impl FromStr for TraceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TraceFormat::Csv),
            "json" | "jsonl" => Ok(TraceFormat::Json),
            other => Err(Error::Parse(format!("unknown trace format '{other}'"))),
        }
    }
}

impl TraceFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TraceFormat::Csv => "csv",
            TraceFormat::Json => "jsonl",
        }
    }
}

/// TOML numbers written either as integers or as floats such as `1e5`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Int(i64),
    Float(f64),
}

impl Number {
    fn as_f64(self) -> f64 {
        match self {
            Number::Int(i) => i as f64,
            Number::Float(f) => f,
        }
    }

    fn as_count(self, what: &str) -> Result<u64> {
        let v = self.as_f64();
        if v < 0.0 || v.fract() != 0.0 || !v.is_finite() {
            return Err(Error::Constraint(format!("{what} must be a nonnegative integer (got {v})")));
        }
        Ok(v as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(Number),
    Many(Vec<Number>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOutput {
    pub dir: Option<PathBuf>,
    pub format: Option<TraceFormat>,
    pub thin: Option<u64>,
    pub intervals: Option<bool>,
}

/// Unvalidated configuration, every field optional so that file values and
/// CLI flags can be layered with [`RawConfig::merge`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub scenario: Option<Scenario>,
    pub policy: Option<PolicyKind>,
    pub k: Option<Number>,
    #[serde(alias = "T")]
    pub horizon: Option<Number>,
    pub kappa: Option<OneOrMany>,
    pub seed: Option<u64>,
    pub seeds: Option<Vec<u64>>,
    #[serde(alias = "reps")]
    pub replications: Option<u64>,
    pub epsilon: Option<f64>,
    pub alpha: Option<f64>,
    pub delta2: Option<f64>,
    pub nu: Option<f64>,
    pub persistence: Option<f64>,
    pub relax_epsilon: Option<bool>,
    pub means: Option<Vec<f64>>,
    pub drift: Option<DriftModel>,
    pub output: Option<RawOutput>,
}

impl RawConfig {
    /// Fields set in `other` win.
    pub fn merge(self, other: RawConfig) -> RawConfig {
        let out = match (self.output, other.output) {
            (Some(a), Some(b)) => Some(RawOutput {
                dir: b.dir.or(a.dir),
                format: b.format.or(a.format),
                thin: b.thin.or(a.thin),
                intervals: b.intervals.or(a.intervals),
            }),
            (a, b) => b.or(a),
        };
        RawConfig {
            scenario: other.scenario.or(self.scenario),
            policy: other.policy.or(self.policy),
            k: other.k.or(self.k),
            horizon: other.horizon.or(self.horizon),
            kappa: other.kappa.or(self.kappa),
            seed: other.seed.or(self.seed),
            seeds: other.seeds.or(self.seeds),
            replications: other.replications.or(self.replications),
            epsilon: other.epsilon.or(self.epsilon),
            alpha: other.alpha.or(self.alpha),
            delta2: other.delta2.or(self.delta2),
            nu: other.nu.or(self.nu),
            persistence: other.persistence.or(self.persistence),
            relax_epsilon: other.relax_epsilon.or(self.relax_epsilon),
            means: other.means.or(self.means),
            drift: other.drift.or(self.drift),
            output: out,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: TraceFormat,
    /// Keep every `thin`-th trace row (violations, first and last rows always kept).
    pub thin: u64,
    /// Emit per-arm interval bounds and true means in every trace row.
    pub intervals: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub policy: PolicyKind,
    pub k: usize,
    pub horizon: u64,
    pub kappas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub replications: u64,
    pub overrides: Overrides,
    pub nu: f64,
    pub persistence: f64,
    pub means: Option<Vec<f64>>,
    pub drift: Option<DriftModel>,
    pub output: OutputConfig,
}

/// Default thinning stride: every row up to `T = 1e5`, every 100th beyond.
pub fn default_thin(horizon: u64) -> u64 {
    if horizon <= 100_000 {
        1
    } else {
        100
    }
}

/// Parses and validates a TOML configuration document.
pub fn load_config(text: &str) -> Result<ExperimentConfig> {
    ExperimentConfig::from_raw(parse_raw(text)?)
}

pub fn load_config_path(path: &Path) -> Result<ExperimentConfig> {
    load_config(&std::fs::read_to_string(path)?)
}

pub fn parse_raw(text: &str) -> Result<RawConfig> {
    toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

impl ExperimentConfig {
    pub fn from_raw(raw: RawConfig) -> Result<Self> {
        let scenario = raw.scenario.unwrap_or(Scenario::Drift10);
        let policy = raw.policy.unwrap_or(PolicyKind::FairUcbe);

        let default_k = match (&raw.means, scenario) {
            (_, Scenario::Opposing2) => 2,
            (Some(m), _) => m.len() as u64,
            _ => 10,
        };
        let k = raw.k.map(|n| n.as_count("k")).transpose()?.unwrap_or(default_k) as usize;
        if k < 2 {
            return Err(Error::InvalidArmCount(k));
        }
        if scenario == Scenario::Opposing2 && k != 2 {
            return Err(Error::Constraint(format!("opposing2 has exactly 2 arms (k = {k})")));
        }

        let horizon = raw
            .horizon
            .ok_or_else(|| Error::Parse("missing 'horizon' (or 'T')".into()))?
            .as_count("horizon")?;
        if horizon < 2 {
            return Err(Error::InvalidHorizon(horizon as f64));
        }

        let kappas: Vec<f64> = match raw.kappa.ok_or_else(|| Error::Parse("missing 'kappa'".into()))? {
            OneOrMany::One(n) => vec![n.as_f64()],
            OneOrMany::Many(v) => v.into_iter().map(Number::as_f64).collect(),
        };
        if kappas.is_empty() {
            return Err(Error::Parse("kappa list is empty".into()));
        }

        let seeds = match (raw.seeds, raw.seed) {
            (Some(s), _) if !s.is_empty() => s,
            (Some(_), _) => return Err(Error::Parse("seeds list is empty".into())),
            (None, Some(s)) => vec![s],
            (None, None) => vec![1],
        };
        let replications = raw.replications.unwrap_or(1);
        if replications < 1 {
            return Err(Error::Constraint("replications >= 1".into()));
        }

        let nu = raw.nu.unwrap_or(DEFAULT_CONCENTRATION);
        if !(nu > 0.0) {
            return Err(Error::Constraint(format!("nu > 0 (nu = {nu})")));
        }
        let persistence = raw.persistence.unwrap_or(DEFAULT_PERSISTENCE);
        if !(0.0..=1.0).contains(&persistence) {
            return Err(Error::Constraint(format!("0 <= persistence <= 1 (persistence = {persistence})")));
        }

        if scenario == Scenario::Custom {
            match &raw.means {
                None => return Err(Error::Parse("custom scenario needs 'means'".into())),
                Some(m) if m.len() != k => {
                    return Err(Error::Constraint(format!("means has {} entries for k = {k}", m.len())))
                }
                _ => {}
            }
        } else if raw.means.is_some() {
            return Err(Error::Parse("'means' is only valid for the custom scenario".into()));
        }

        let out = raw.output.unwrap_or_default();
        let output = OutputConfig {
            dir: out.dir,
            format: out.format.unwrap_or_default(),
            thin: out.thin.unwrap_or_else(|| default_thin(horizon)).max(1),
            intervals: out.intervals.unwrap_or(false),
        };

        let config = ExperimentConfig {
            scenario,
            policy,
            k,
            horizon,
            kappas,
            seeds,
            replications,
            overrides: Overrides {
                epsilon: raw.epsilon,
                alpha: raw.alpha,
                delta2: raw.delta2,
                relax_epsilon: raw.relax_epsilon.unwrap_or(false),
            },
            nu,
            persistence,
            means: raw.means,
            drift: raw.drift,
            output,
        };
        for &kappa in &config.kappas {
            config.hyperparams(kappa)?;
        }
        if let Some(means) = &config.means {
            EnvState::with_means(means.clone(), horizon, config.kappas[0], DriftModel::Frozen)?;
        }
        Ok(config)
    }

    pub fn hyperparams(&self, kappa: f64) -> Result<Hyperparams> {
        derive_hyperparams(self.horizon, kappa, self.k, &self.overrides)
    }

    /// Fresh environment for one replication.
    pub fn make_env(&self, kappa: f64, seed: u64) -> Result<EnvState> {
        let mut env = match self.scenario {
            Scenario::Drift10 => make_drifting_env(self.k, self.horizon, kappa, seed)?,
            Scenario::Stationary => make_stationary_env(self.k, self.horizon, kappa, seed)?,
            Scenario::Opposing2 => make_opposing_env(self.horizon, kappa)?,
            Scenario::Custom => {
                let means = self.means.clone().ok_or_else(|| Error::Parse("custom scenario needs 'means'".into()))?;
                let mut env = EnvState::with_means(
                    means,
                    self.horizon,
                    kappa,
                    self.drift.unwrap_or(DriftModel::RandomWalk),
                )?;
                // directions come from the same initial law as drift10
                let init = make_drifting_env(self.k, self.horizon, kappa, seed)?;
                env.directions = init.directions;
                env
            }
        };
        env.concentration = self.nu;
        if self.scenario != Scenario::Opposing2 {
            env.persistence = self.persistence;
        }
        Ok(env)
    }

    /// Every `(kappa, seed)` pair in run order: per kappa, per base seed,
    /// seeds `base + 0 .. base + replications - 1`.
    pub fn jobs(&self) -> Vec<(f64, u64)> {
        let mut jobs = Vec::new();
        for &kappa in &self.kappas {
            for &base in &self.seeds {
                for r in 0..self.replications {
                    jobs.push((kappa, base.wrapping_add(r)));
                }
            }
        }
        jobs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = load_config("scenario = 'drift10'\nT = 1e5\nkappa = 1.0\nseed = 1\n").unwrap();
        assert_eq!(c.horizon, 100_000);
        assert_eq!(c.k, 10);
        assert_eq!(c.kappas, vec![1.0]);
        assert_eq!(c.seeds, vec![1]);
        assert_eq!(c.nu, 2.0);
        assert_eq!(c.output.thin, 1);
        let hp = c.hyperparams(1.0).unwrap();
        assert_eq!(hp.delta2, hp.explore_prob);
    }

    #[test]
    fn negative_kappa_is_constraint_error() {
        let err = load_config("horizon = 1000\nkappa = -1\n").unwrap_err();
        assert!(err.is_constraint(), "{err}");
        assert!(err.to_string().contains("kappa > 0"));
    }

    #[test]
    fn parse_errors_are_not_constraint_errors() {
        let err = load_config("horizon = [\n").unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
        assert!(!err.is_constraint());
        assert!(matches!(load_config("horizon = 10\nkappa = 1\nbogus = 3\n"), Err(Error::Parse(_))));
        assert!(matches!(load_config("horizon = 10\nkappa = []\n"), Err(Error::Parse(_))));
    }

    #[test]
    fn opposing_forces_two_arms() {
        let c = load_config("scenario = 'opposing2'\nhorizon = 1000\nkappa = 1\n").unwrap();
        assert_eq!(c.k, 2);
        assert!(load_config("scenario = 'opposing2'\nk = 3\nhorizon = 1000\nkappa = 1\n").is_err());
    }

    #[test]
    fn merge_prefers_later() {
        let file = parse_raw("horizon = 1000\nkappa = 1\nseed = 3\n[output]\nthin = 5\n").unwrap();
        let flags = RawConfig { seed: Some(9), output: Some(RawOutput { dir: Some("x".into()), ..Default::default() }), ..Default::default() };
        let c = ExperimentConfig::from_raw(file.merge(flags)).unwrap();
        assert_eq!(c.seeds, vec![9]);
        assert_eq!(c.output.thin, 5);
        assert_eq!(c.output.dir, Some(PathBuf::from("x")));
    }

    #[test]
    fn jobs_follow_seed_rule() {
        let c = load_config("horizon = 1000\nkappa = [1.0, 2.0]\nseed = 10\nreplications = 3\n").unwrap();
        assert_eq!(
            c.jobs(),
            vec![(1.0, 10), (1.0, 11), (1.0, 12), (2.0, 10), (2.0, 11), (2.0, 12)]
        );
    }

    #[test]
    fn custom_needs_means() {
        assert!(load_config("scenario = 'custom'\nhorizon = 100\nkappa = 1\n").is_err());
        let c = load_config("scenario = 'custom'\nhorizon = 100\nkappa = 1\nmeans = [0.2, 0.4, 0.9]\ndrift = 'frozen'\n").unwrap();
        assert_eq!(c.k, 3);
        let env = c.make_env(1.0, 0).unwrap();
        assert_eq!(env.means, vec![0.2, 0.4, 0.9]);
    }

    #[test]
    fn large_horizon_thins_by_default() {
        let c = load_config("horizon = 1e6\nkappa = 1\n").unwrap();
        assert_eq!(c.output.thin, 100);
    }
}
