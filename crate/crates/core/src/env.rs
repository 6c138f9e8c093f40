//! Ground-truth reward simulators.
//!
//! Means live in `[0.05, 0.95]` and move by at most `T^(-kappa)` per step.
//! Rewards are Beta draws in mean/concentration form, `Beta(nu mu, nu (1 - mu))`.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, SimRng, Stream};

pub const MEAN_LOW: f64 = 0.05;
pub const MEAN_HIGH: f64 = 0.95;
pub const DEFAULT_PERSISTENCE: f64 = 0.8;
pub const DEFAULT_CONCENTRATION: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftModel {
    /// Direction kept with probability `persistence`, magnitude `Uniform[0, T^-kappa]`.
    RandomWalk,
    /// Every arm moves by exactly `T^-kappa` in its fixed direction.
    Deterministic,
    /// Means never change.
    Frozen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub horizon: u64,
    pub kappa: f64,
    pub means: Vec<f64>,
    pub directions: Vec<i8>,
    pub persistence: f64,
    pub concentration: f64,
    pub drift: DriftModel,
    /// Current timestep, starting at 1.
    pub t: u64,
}

fn check_common(k: usize, horizon: u64, kappa: f64) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidArmCount(k));
    }
    if horizon < 2 {
        return Err(Error::InvalidHorizon(horizon as f64));
    }
    if !(kappa > 0.0) {
        return Err(Error::Constraint(format!("kappa > 0 (kappa = {kappa})")));
    }
    Ok(())
}

/// Uniform initial means and random initial directions, driven by `seed`.
pub fn make_drifting_env(k: usize, horizon: u64, kappa: f64, seed: u64) -> Result<EnvState> {
    check_common(k, horizon, kappa)?;
    let mut rng = stream_rng(seed, Stream::EnvInit);
    let means = (0..k).map(|_| rng.random_range(MEAN_LOW..=MEAN_HIGH)).collect();
    let directions = (0..k).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
    Ok(EnvState {
        horizon,
        kappa,
        means,
        directions,
        persistence: DEFAULT_PERSISTENCE,
        concentration: DEFAULT_CONCENTRATION,
        drift: DriftModel::RandomWalk,
        t: 1,
    })
}

/// Same initial law as [`make_drifting_env`] but means never move.
pub fn make_stationary_env(k: usize, horizon: u64, kappa: f64, seed: u64) -> Result<EnvState> {
    let mut env = make_drifting_env(k, horizon, kappa, seed)?;
    env.drift = DriftModel::Frozen;
    Ok(env)
}

/// Two arms starting at `(0.95, 0.05)` and moving toward each other by
/// exactly `T^-kappa` per step.
pub fn make_opposing_env(horizon: u64, kappa: f64) -> Result<EnvState> {
    check_common(2, horizon, kappa)?;
    Ok(EnvState {
        horizon,
        kappa,
        means: vec![MEAN_HIGH, MEAN_LOW],
        directions: vec![-1, 1],
        persistence: 1.0,
        concentration: DEFAULT_CONCENTRATION,
        drift: DriftModel::Deterministic,
        t: 1,
    })
}

impl EnvState {
    /// Environment from explicit means, used by custom scenarios.
    pub fn with_means(means: Vec<f64>, horizon: u64, kappa: f64, drift: DriftModel) -> Result<Self> {
        check_common(means.len(), horizon, kappa)?;
        if let Some(bad) = means.iter().find(|m| !(MEAN_LOW..=MEAN_HIGH).contains(*m)) {
            return Err(Error::Constraint(format!(
                "initial means must lie in [{MEAN_LOW}, {MEAN_HIGH}] (got {bad})"
            )));
        }
        let k = means.len();
        Ok(EnvState {
            horizon,
            kappa,
            means,
            directions: vec![1; k],
            persistence: DEFAULT_PERSISTENCE,
            concentration: DEFAULT_CONCENTRATION,
            drift,
            t: 1,
        })
    }

    pub fn num_arms(&self) -> usize {
        self.means.len()
    }

    /// Largest allowed one-step change of any mean, `T^-kappa`.
    pub fn step_bound(&self) -> f64 {
        (self.horizon as f64).powf(-self.kappa)
    }

    /// Snapshot of the current means. Policies never see this.
    pub fn true_means(&self) -> Vec<f64> {
        self.means.clone()
    }

    /// Advances the means from `t` to `t + 1`. No-op (returns `false`) once `t == T`.
    pub fn drift_step(&mut self, rng: &mut SimRng) -> bool {
        if self.t >= self.horizon {
            return false;
        }
        let bound = self.step_bound();
        match self.drift {
            DriftModel::Frozen => {}
            DriftModel::Deterministic => {
                for (m, &d) in self.means.iter_mut().zip(&self.directions) {
                    *m = (*m + f64::from(d) * bound).clamp(MEAN_LOW, MEAN_HIGH);
                }
            }
            DriftModel::RandomWalk => {
                for (m, d) in self.means.iter_mut().zip(self.directions.iter_mut()) {
                    if !rng.random_bool(self.persistence) {
                        *d = -*d;
                    }
                    let step = rng.random_range(0.0..=bound);
                    *m = (*m + f64::from(*d) * step).clamp(MEAN_LOW, MEAN_HIGH);
                }
            }
        }
        self.t += 1;
        true
    }

    /// Draws a reward for `arm` at the current means.
    pub fn sample_reward(&self, arm: usize, rng: &mut SimRng) -> Result<f64> {
        let mu = *self.means.get(arm).ok_or(Error::InvalidArm { arm, k: self.num_arms() })?;
        let nu = self.concentration;
        let beta = Beta::new(nu * mu, nu * (1.0 - mu))
            .map_err(|e| Error::Constraint(format!("beta parameters for mean {mu}: {e}")))?;
        Ok(beta.sample(rng).clamp(0.0, 1.0))
    }
}
