//! Fair-UCBe and the two baselines it is compared against.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::active_set::{build_active_set, ActiveSet};
use crate::error::{Error, Result};
use crate::hyperparams::Hyperparams;
use crate::interval::{build_intervals, hoeffding_term, ConfidenceInterval};
use crate::rng::SimRng;
use crate::state::PolicyState;

/// One round's choice together with the full distribution it was drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub timestep: u64,
    pub chosen_arm: usize,
    /// Marginal selection probabilities, exploration included.
    pub probs: Vec<f64>,
    pub explored: bool,
    pub active_set: ActiveSet,
    pub intervals: Vec<ConfidenceInterval>,
}

/// `explore_prob / k + (1 - explore_prob) / |active|` for members,
/// `explore_prob / k` for everyone else.
pub fn decision_distribution(active: &ActiveSet, num_arms: usize, explore_prob: f64) -> Vec<f64> {
    let base = explore_prob / num_arms as f64;
    let member = base + (1.0 - explore_prob) / active.len() as f64;
    let mut probs = vec![base; num_arms];
    for &m in &active.members {
        probs[m] = member;
    }
    probs
}

pub trait Policy: Send + Sync {
    fn name(&self) -> &'static str;

    fn decide(&self, state: &PolicyState, t: u64, rng: &mut SimRng) -> Decision;
}

/// One step of Fair-UCBe at timestep `t`.
pub fn fair_ucbe_step(state: &PolicyState, t: u64, hp: &Hyperparams, rng: &mut SimRng) -> Decision {
    let k = state.num_arms();
    let intervals = build_intervals(state, t, hp);
    let active_set = build_active_set(&intervals);
    let probs = decision_distribution(&active_set, k, hp.explore_prob);

    let explored = rng.random_bool(hp.explore_prob);
    let chosen_arm = if explored {
        rng.random_range(0..k)
    } else {
        active_set.members[rng.random_range(0..active_set.len())]
    };

    Decision { timestep: t, chosen_arm, probs, explored, active_set, intervals }
}

/// Chained-active-set policy over the full history with no exploration.
pub fn fairbandits_step(state: &PolicyState, t: u64, hp: &Hyperparams, rng: &mut SimRng) -> Decision {
    let k = state.num_arms();
    let intervals: Vec<ConfidenceInterval> = state
        .buffers()
        .iter()
        .map(|buf| match buf.window_mean(buf.len()) {
            None => ConfidenceInterval::prior(),
            Some(mean) => {
                ConfidenceInterval::clipped(mean, hoeffding_term(buf.len(), t, k, hp.delta2), buf.len())
            }
        })
        .collect();
    let active_set = build_active_set(&intervals);
    let probs = decision_distribution(&active_set, k, 0.0);
    let chosen_arm = active_set.members[rng.random_range(0..active_set.len())];

    Decision { timestep: t, chosen_arm, probs, explored: false, active_set, intervals }
}

/// Deterministic UCB1: unpulled arms first, then `argmax mean + sqrt(2 ln t / n)`.
pub fn ucb1_step(state: &PolicyState, t: u64) -> Decision {
    let k = state.num_arms();
    let log_t = (t.max(1) as f64).ln();
    let mut intervals = Vec::with_capacity(k);
    let mut first_unpulled = None;
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, buf) in state.buffers().iter().enumerate() {
        match buf.window_mean(buf.len()) {
            None => {
                intervals.push(ConfidenceInterval::prior());
                first_unpulled.get_or_insert(i);
            }
            Some(mean) => {
                let bonus = (2.0 * log_t / buf.len() as f64).sqrt();
                intervals.push(ConfidenceInterval::clipped(mean, bonus, buf.len()));
                if mean + bonus > best.0 {
                    best = (mean + bonus, i);
                }
            }
        }
    }
    let chosen_arm = first_unpulled.unwrap_or(best.1);
    let mut probs = vec![0.0; k];
    probs[chosen_arm] = 1.0;
    Decision {
        timestep: t,
        chosen_arm,
        probs,
        explored: false,
        active_set: ActiveSet { members: vec![chosen_arm], anchor: chosen_arm },
        intervals,
    }
}

#[derive(Debug, Clone)]
pub struct FairUcbe {
    pub hp: Hyperparams,
}

impl Policy for FairUcbe {
    fn name(&self) -> &'static str {
        "fair_ucbe"
    }

    fn decide(&self, state: &PolicyState, t: u64, rng: &mut SimRng) -> Decision {
        fair_ucbe_step(state, t, &self.hp, rng)
    }
}

#[derive(Debug, Clone)]
pub struct FairBandits {
    pub hp: Hyperparams,
}

impl Policy for FairBandits {
    fn name(&self) -> &'static str {
        "fairbandits"
    }

    fn decide(&self, state: &PolicyState, t: u64, rng: &mut SimRng) -> Decision {
        fairbandits_step(state, t, &self.hp, rng)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Ucb1;

impl Policy for Ucb1 {
    fn name(&self) -> &'static str {
        "ucb1"
    }

    fn decide(&self, state: &PolicyState, t: u64, _rng: &mut SimRng) -> Decision {
        ucb1_step(state, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    FairUcbe,
    Fairbandits,
    Ucb1,
}

impl PolicyKind {
    pub fn build(self, hp: &Hyperparams) -> Box<dyn Policy> {
        match self {
            PolicyKind::FairUcbe => Box::new(FairUcbe { hp: hp.clone() }),
            PolicyKind::Fairbandits => Box::new(FairBandits { hp: hp.clone() }),
            PolicyKind::Ucb1 => Box::new(Ucb1),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::FairUcbe => "fair_ucbe",
            PolicyKind::Fairbandits => "fairbandits",
            PolicyKind::Ucb1 => "ucb1",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fair_ucbe" | "fair-ucbe" => Ok(PolicyKind::FairUcbe),
            "fairbandits" | "fair_bandits" => Ok(PolicyKind::Fairbandits),
            "ucb1" => Ok(PolicyKind::Ucb1),
            other => Err(Error::Parse(format!("unknown policy '{other}'"))),
        }
    }
}
