//! Dynamic regret, the regret bound `B(T)`, and per-step audits against the
//! true means.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperparams::ln_18_11;
use crate::interval::ConfidenceInterval;
use crate::policy::Decision;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u64,
    pub decision: Decision,
    pub reward: f64,
    pub oracle_means: Vec<f64>,
    pub inst_regret: f64,
    pub fairness_violation: bool,
    pub coverage_violation: bool,
}

impl StepRecord {
    /// Audits `decision` against the means in force at its timestep.
    pub fn audit(decision: Decision, reward: f64, oracle_means: Vec<f64>) -> Self {
        let inst_regret = instantaneous_regret(&oracle_means, decision.chosen_arm);
        let fairness_violation = fairness_audit(&decision.probs, &oracle_means);
        let coverage_violation = !coverage_audit(&decision.intervals, &oracle_means);
        StepRecord {
            t: decision.timestep,
            decision,
            reward,
            oracle_means,
            inst_regret,
            fairness_violation,
            coverage_violation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub cum_regret_curve: Vec<f64>,
    pub bound_b: f64,
    pub ratio_curve: Vec<f64>,
    pub fairness_violations: usize,
    pub coverage_violations: usize,
    /// Some step had some true mean outside its interval.
    pub coverage_failure: bool,
    /// Some step broke the fairness definition.
    pub fairness_failure: bool,
}

impl RunSummary {
    pub fn final_regret(&self) -> f64 {
        self.cum_regret_curve.last().copied().unwrap_or(0.0)
    }

    pub fn final_ratio(&self) -> f64 {
        self.ratio_curve.last().copied().unwrap_or(0.0)
    }

    pub fn max_ratio(&self) -> f64 {
        self.ratio_curve.iter().copied().fold(0.0, f64::max)
    }
}

/// `max_i mu_i - mu_chosen`.
pub fn instantaneous_regret(oracle_means: &[f64], chosen_arm: usize) -> f64 {
    let best = oracle_means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    best - oracle_means[chosen_arm]
}

/// Denominator of the regret-ratio curves:
/// `k^(3/2) T^(1 - alpha/2) sqrt( ln( T^(1 + alpha/4) / ln(18/11) ) )`.
pub fn regret_bound_b(num_arms: usize, horizon: u64, alpha: f64) -> f64 {
    let t = horizon as f64;
    let log_arg = (1.0 + alpha / 4.0) * t.ln() - ln_18_11().ln();
    (num_arms as f64).powf(1.5) * t.powf(1.0 - alpha / 2.0) * log_arg.sqrt()
}

/// The bound with the asymptotic constant:
/// `k^(3/2) T^(1 - alpha/2) sqrt( ln( sqrt(k pi^2 / 6) T^(1 + alpha/4) ) )`.
pub fn regret_bound_theorem(num_arms: usize, horizon: u64, alpha: f64) -> f64 {
    let t = horizon as f64;
    let k = num_arms as f64;
    let log_arg = 0.5 * (k * PI * PI / 6.0).ln() + (1.0 + alpha / 4.0) * t.ln();
    k.powf(1.5) * t.powf(1.0 - alpha / 2.0) * log_arg.sqrt()
}

/// `true` when some arm gets strictly more probability than another arm
/// whose true mean is at least as high.
///
/// Sorts arms by probability and sweeps the distinct levels, so it is exact
/// for any distribution, not only the two-level ones policies emit.
pub fn fairness_audit(probs: &[f64], oracle_means: &[f64]) -> bool {
    assert_eq!(probs.len(), oracle_means.len(), "probs and means must have equal length");
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&i, &j| probs[j].total_cmp(&probs[i]));

    let mut min_mean_above = f64::INFINITY;
    let mut start = 0;
    while start < order.len() {
        let level = probs[order[start]];
        let end = start + order[start..].iter().take_while(|&&i| probs[i] == level).count();
        let group = &order[start..end];
        let max_here = group.iter().map(|&i| oracle_means[i]).fold(f64::NEG_INFINITY, f64::max);
        if min_mean_above <= max_here {
            return true;
        }
        let min_here = group.iter().map(|&i| oracle_means[i]).fold(f64::INFINITY, f64::min);
        min_mean_above = min_mean_above.min(min_here);
        start = end;
    }
    false
}

/// `true` when every true mean lies inside its interval.
pub fn coverage_audit(intervals: &[ConfidenceInterval], oracle_means: &[f64]) -> bool {
    assert_eq!(intervals.len(), oracle_means.len(), "intervals and means must have equal length");
    intervals.iter().zip(oracle_means).all(|(iv, &mu)| iv.contains(mu))
}

/// Streaming accumulator, so long runs need not keep every [`StepRecord`].
#[derive(Debug, Clone, Default)]
pub struct SummaryBuilder {
    cum: Vec<f64>,
    total: f64,
    fairness_violations: usize,
    coverage_violations: usize,
}

impl SummaryBuilder {
    pub fn with_capacity(n: usize) -> Self {
        SummaryBuilder { cum: Vec::with_capacity(n), ..Default::default() }
    }

    pub fn push(&mut self, inst_regret: f64, fairness_violation: bool, coverage_violation: bool) {
        self.total += inst_regret;
        self.cum.push(self.total);
        self.fairness_violations += usize::from(fairness_violation);
        self.coverage_violations += usize::from(coverage_violation);
    }

    pub fn push_record(&mut self, rec: &StepRecord) {
        self.push(rec.inst_regret, rec.fairness_violation, rec.coverage_violation);
    }

    pub fn cumulative(&self) -> f64 {
        self.total
    }

    pub fn finish(self, bound_b: f64) -> Result<RunSummary> {
        if self.cum.is_empty() {
            return Err(Error::EmptyTrace);
        }
        let ratio_curve = self.cum.iter().map(|r| r / bound_b).collect();
        Ok(RunSummary {
            cum_regret_curve: self.cum,
            bound_b,
            ratio_curve,
            fairness_violations: self.fairness_violations,
            coverage_violations: self.coverage_violations,
            coverage_failure: self.coverage_violations > 0,
            fairness_failure: self.fairness_violations > 0,
        })
    }
}

/// Aggregates a full trace; `bound_b` is `B(T)` for the whole horizon.
pub fn summarize(trace: &[StepRecord], bound_b: f64) -> Result<RunSummary> {
    let mut builder = SummaryBuilder::with_capacity(trace.len());
    for rec in trace {
        builder.push_record(rec);
    }
    builder.finish(bound_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::active_set::ActiveSet;

    fn iv(a: f64, b: f64) -> ConfidenceInterval {
        ConfidenceInterval { lower: a, upper: b, center: 0.5 * (a + b), radius: 0.5 * (b - a), window: 1 }
    }

    #[test]
    fn regret_examples() {
        assert_eq!(instantaneous_regret(&[0.2, 0.8, 0.5], 1), 0.0);
        assert!((instantaneous_regret(&[0.95, 0.05], 1) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn bound_matches_independent_evaluation() {
        // mpmath, k = 10, T = 1e7, alpha from default derivation at kappa = 1
        let alpha = 0.409_074_213_468_580_22;
        let b = regret_bound_b(10, 10_000_000, alpha);
        assert!((b / 50_295_586.106_553_9 - 1.0).abs() < 1e-12, "{b}");
        let b2 = regret_bound_theorem(10, 10_000_000, alpha);
        assert!((b2 / 51_228_652.928_976_47 - 1.0).abs() < 1e-12, "{b2}");
    }

    #[test]
    fn bound_grows_with_horizon() {
        let mut prev = 0.0;
        for t in [10u64, 100, 1_000, 100_000, 10_000_000] {
            let b = regret_bound_b(10, t, 0.4);
            assert!(b > prev);
            prev = b;
        }
    }

    #[test]
    fn fairness_examples() {
        assert!(!fairness_audit(&[0.25; 4], &[0.1, 0.9, 0.3, 0.3]));
        assert!(fairness_audit(&[0.95, 0.05], &[0.3, 0.7]));
        assert!(!fairness_audit(&[0.95, 0.05], &[0.7, 0.3]));
        // equal means with unequal probability break the letter of the definition
        assert!(fairness_audit(&[0.6, 0.4], &[0.5, 0.5]));
    }

    #[test]
    fn coverage_examples() {
        assert!(coverage_audit(&[iv(0.0, 1.0); 3], &[0.0, 0.5, 1.0]));
        assert!(!coverage_audit(&[iv(0.2, 0.4)], &[0.41]));
        assert!(coverage_audit(&[iv(0.2, 0.4)], &[0.4]));
    }

    fn record(r: f64) -> StepRecord {
        StepRecord {
            t: 1,
            decision: Decision {
                timestep: 1,
                chosen_arm: 0,
                probs: vec![1.0],
                explored: false,
                active_set: ActiveSet { members: vec![0], anchor: 0 },
                intervals: vec![ConfidenceInterval::prior()],
            },
            reward: 0.0,
            oracle_means: vec![0.5],
            inst_regret: r,
            fairness_violation: false,
            coverage_violation: false,
        }
    }

    #[test]
    fn summary_examples() {
        let s = summarize(&[record(0.9)], 2.0).unwrap();
        assert_eq!(s.cum_regret_curve, vec![0.9]);
        assert_eq!(s.ratio_curve, vec![0.45]);
        let s = summarize(&vec![record(0.0); 5], 1.0).unwrap();
        assert!(s.cum_regret_curve.iter().all(|&x| x == 0.0));
        assert!(!s.coverage_failure);
        assert!(matches!(summarize(&[], 1.0), Err(Error::EmptyTrace)));
    }
}
