//! Brute-force and Monte-Carlo checkers.
//!
//! Nothing here calls into the interval, active-set or policy code it is
//! used to validate; radii and closures are recomputed from scratch.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hyperparams::{epsilon_floor, Hyperparams};
use crate::interval::ConfidenceInterval;
use crate::rng::{stream_rng, Stream};

/// Location of the maximiser of the epsilon floor as printed (`~14.5669`).
pub const PRINTED_FLOOR_ARGMAX: f64 = 14.5669;
/// Printed value of the maximum, `0.3735`.
pub const PRINTED_FLOOR_MAX: f64 = 0.3735;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    /// Human readable description of the tightest point.
    pub worst_case: String,
    /// Distance to failure at the tightest point; positive iff passed.
    pub margin: f64,
    pub samples_used: u64,
}

impl CheckReport {
    fn new(name: &str, margin: f64, worst_case: String, samples_used: u64) -> Self {
        CheckReport { name: name.to_string(), passed: margin > 0.0, worst_case, margin, samples_used }
    }
}

fn brute_anchor(intervals: &[ConfidenceInterval]) -> usize {
    let max_b = intervals.iter().map(|iv| iv.upper).fold(f64::NEG_INFINITY, f64::max);
    intervals.iter().position(|iv| iv.upper == max_b).unwrap_or(0)
}

/// Active set by naive repeat-until-fixed-point over all pairs. Sorted ascending.
pub fn brute_force_active_set(intervals: &[ConfidenceInterval]) -> Vec<usize> {
    let k = intervals.len();
    let mut member = vec![false; k];
    member[brute_anchor(intervals)] = true;
    loop {
        let mut changed = false;
        for j in 0..k {
            if member[j] {
                continue;
            }
            if (0..k).any(|i| member[i] && intervals[j].upper >= intervals[i].lower) {
                member[j] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    (0..k).filter(|&i| member[i]).collect()
}

/// Active set as reachability from the anchor in the overlap graph
/// (`i -> j` iff `b_j >= a_i`), via a Warshall transitive closure.
pub fn closure_active_set(intervals: &[ConfidenceInterval]) -> Vec<usize> {
    let k = intervals.len();
    let mut reach: Vec<Vec<bool>> = (0..k)
        .map(|i| (0..k).map(|j| i == j || intervals[j].upper >= intervals[i].lower).collect())
        .collect();
    for m in 0..k {
        for i in 0..k {
            if reach[i][m] {
                for j in 0..k {
                    if reach[m][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let anchor = brute_anchor(intervals);
    (0..k).filter(|&j| reach[anchor][j]).collect()
}

/// Direct O(k^2) reading of the fairness definition.
pub fn pairwise_fairness_violation(probs: &[f64], oracle_means: &[f64]) -> bool {
    let k = probs.len();
    (0..k).any(|i| (0..k).any(|j| probs[i] > probs[j] && oracle_means[i] <= oracle_means[j]))
}

/// `(1 - x/n)^n`, evaluated through `ln_1p` to stay accurate for large `n`.
pub fn exploration_lhs(x: f64, n: f64) -> f64 {
    (n * (-x / n).ln_1p()).exp()
}

/// Grid check of `(1 - x/n)^n <= 1 - 7x/9` on `x in [0, 1/2]`,
/// `n in {1..1000} ∪ {1e4, 1e6}`. Minimum slack is taken over `x > 0`; the
/// `x = 0` column must hold with equality.
pub fn check_exploration_inequality(resolution: usize) -> CheckReport {
    let resolution = resolution.max(100);
    let ns: Vec<f64> = (1..=1000).map(f64::from).chain([1e4, 1e6]).collect();
    let mut min_slack = f64::INFINITY;
    let mut worst = (0.0, 0.0);
    let mut boundary_ok = true;
    let mut evaluated = 0u64;
    for &n in &ns {
        boundary_ok &= exploration_lhs(0.0, n) == 1.0;
        for j in 1..=resolution {
            let x = 0.5 * j as f64 / resolution as f64;
            let slack = 1.0 - 7.0 * x / 9.0 - exploration_lhs(x, n);
            evaluated += 1;
            if slack < min_slack {
                min_slack = slack;
                worst = (x, n);
            }
        }
    }
    let margin = if boundary_ok { min_slack } else { -1.0 };
    CheckReport::new(
        "exploration_inequality",
        margin,
        format!("x = {}, n = {}: slack {min_slack:.6e}; x = 0 equality {}", worst.0, worst.1, boundary_ok),
        evaluated,
    )
}

/// `(max, argmax)` of the epsilon floor over `points` log-spaced horizons in `[2, 1e9]`.
pub fn epsilon_floor_grid_max(points: usize) -> Result<(f64, f64)> {
    let points = points.max(2);
    let (lo, hi) = (2.0f64.ln(), 1e9f64.ln());
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..points {
        let t = (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp();
        let v = epsilon_floor(t)?;
        if v > best.0 {
            best = (v, t);
        }
    }
    Ok(best)
}

/// Evaluates the epsilon floor on `points` log-spaced horizons in `[2, 1e9]`
/// and checks it never exceeds `1 / (2e ln(18/11))`, that its maximiser is
/// within 0.5 of the printed 14.5669 and the maximum within 1e-3 of 0.3735.
pub fn check_epsilon_bound(points: usize) -> Result<CheckReport> {
    let points = points.max(2);
    let bound = 1.0 / (2.0 * std::f64::consts::E * (18.0f64 / 11.0).ln());
    let (max_value, argmax) = epsilon_floor_grid_max(points)?;
    // rounding allowance: the grid maximum can land within an ulp of the bound
    let bound_margin = bound + 1e-12 - max_value;
    let location_margin = 0.5 - (argmax - PRINTED_FLOOR_ARGMAX).abs();
    let value_margin = 1e-3 - (max_value - PRINTED_FLOOR_MAX).abs();
    let margin = bound_margin.min(location_margin).min(value_margin);
    Ok(CheckReport::new(
        "epsilon_floor_bound",
        margin,
        format!("max {max_value:.10} at T = {argmax:.6} (bound {bound:.10})"),
        points as u64,
    ))
}

/// Worst-case selection probability of any arm, `1 / (k T^(alpha/2))`.
pub fn spread_selection_prob(hp: &Hyperparams) -> f64 {
    1.0 / (hp.num_arms as f64 * (hp.horizon as f64).powf(hp.alpha / 2.0))
}

/// Block length `ceil(k T^(alpha/2 + epsilon))`.
pub fn spread_block_len(hp: &Hyperparams) -> u64 {
    (hp.num_arms as f64 * (hp.horizon as f64).powf(hp.alpha / 2.0 + hp.epsilon)).ceil() as u64
}

/// Replications in which some arm goes a whole block without a sample.
///
/// Each step draws one uniform number and arm `i` is sampled iff it lands in
/// `[i p, (i+1) p)`, so arms are mutually exclusive and each has probability
/// exactly `p` (requires `k p <= 1`). `[1, T]` is cut into consecutive
/// blocks of `block_len` steps; a trailing partial block is not checked.
pub fn spread_failures(
    horizon: u64,
    num_arms: usize,
    select_prob: f64,
    block_len: u64,
    replications: u64,
    seed: u64,
) -> u64 {
    assert!(num_arms as f64 * select_prob <= 1.0 + 1e-12, "k * p must not exceed 1");
    let mut rng = stream_rng(seed, Stream::Oracle);
    let blocks = horizon / block_len.max(1);
    let mut failures = 0;
    let mut seen = vec![false; num_arms];
    for _ in 0..replications {
        let mut failed = false;
        for _ in 0..blocks {
            seen.iter_mut().for_each(|s| *s = false);
            for _ in 0..block_len {
                let u: f64 = rng.random();
                let slot = (u / select_prob) as usize;
                if slot < num_arms {
                    seen[slot] = true;
                }
            }
            if !failed && seen.iter().any(|s| !s) {
                failed = true;
            }
        }
        failures += u64::from(failed);
    }
    failures
}

fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Monte-Carlo estimate of the probability that some arm has an empty block,
/// compared against `delta1 = T^(-alpha/2)` plus three standard errors.
pub fn check_sampling_spread(hp: &Hyperparams, replications: u64, seed: u64) -> Result<CheckReport> {
    hp.validate()?;
    let p = spread_selection_prob(hp);
    let block = spread_block_len(hp);
    let fails = spread_failures(hp.horizon, hp.num_arms, p, block, replications, seed);
    let rate = fails as f64 / replications as f64;
    let budget = hp.delta1 + 3.0 * binomial_se(hp.delta1, replications);
    Ok(CheckReport::new(
        "sampling_spread",
        budget - rate,
        format!(
            "T = {}, k = {}, p = {p:.4e}, block = {block}: failure rate {rate:.4e} vs delta1 {:.4e} (+3 se = {budget:.4e})",
            hp.horizon, hp.num_arms, hp.delta1
        ),
        replications * hp.horizon,
    ))
}

/// How the true mean moved over the samples behind an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftPattern {
    /// Fixed mean.
    None,
    /// Every sample gap moves the mean by the full allowance in one direction.
    Adversarial,
    /// Each gap moves the mean by a uniform amount within the allowance, random sign.
    Random,
}

/// Radius of the drift-aware Hoeffding interval recomputed from first
/// principles: `A / tau + k T^(alpha/2 + eps - kappa) (tau + 3) / 2` with
/// `A = sqrt( (tau/2) ln(k pi^2 t^2 / (3 delta2)) )`. Returns `(A, radius)`.
pub fn drift_aware_radius(tau: usize, t: u64, hp: &Hyperparams) -> (f64, f64) {
    let k = hp.num_arms as f64;
    let tf = t as f64;
    let big_t = hp.horizon as f64;
    let a = ((tau as f64 / 2.0) * (k * PI * PI * tf * tf / (3.0 * hp.delta2)).ln()).sqrt();
    let drift = k * big_t.powf(hp.alpha / 2.0 + hp.epsilon - hp.kappa) * (tau as f64 + 3.0) / 2.0;
    (a, a / tau as f64 + drift)
}

/// Miss probability allowed for one (arm, time) pair, `2 exp(-2 A^2 / tau)`.
pub fn miss_budget(tau: usize, t: u64, hp: &Hyperparams) -> f64 {
    let (a, _) = drift_aware_radius(tau, t, hp);
    2.0 * (-2.0 * a * a / tau as f64).exp()
}

/// Monte-Carlo coverage of the drift-aware interval.
///
/// Samples are spaced `floor(k T^(alpha/2 + eps))` steps apart going back from
/// `t` (the widest spacing the spread event allows), drawn as Bernoulli with
/// the mean in force at their own time, and the interval is centred on the
/// window mean. Misses are compared with [`miss_budget`] plus three
/// standard errors.
pub fn check_hoeffding_coverage(
    tau: usize,
    t: u64,
    hp: &Hyperparams,
    pattern: DriftPattern,
    replications: u64,
    seed: u64,
) -> CheckReport {
    let tau = tau.max(1);
    let (_, radius) = drift_aware_radius(tau, t, hp);
    let budget = miss_budget(tau, t, hp);
    let gap = (hp.num_arms as f64 * (hp.horizon as f64).powf(hp.alpha / 2.0 + hp.epsilon)).floor();
    let per_gap = gap * (hp.horizon as f64).powf(-hp.kappa);
    let mut rng = stream_rng(seed, Stream::Oracle);

    let mut misses = 0u64;
    let mut worst_err: f64 = 0.0;
    for _ in 0..replications {
        let current: f64 = rng.random_range(0.2..0.8);
        let mut mean = current;
        let mut sum = 0.0;
        for _ in 0..tau {
            let x = if rng.random_bool(mean.clamp(0.0, 1.0)) { 1.0 } else { 0.0 };
            sum += x;
            // step back one gap in time
            mean = match pattern {
                DriftPattern::None => mean,
                DriftPattern::Adversarial => mean + per_gap,
                DriftPattern::Random => {
                    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    mean + sign * rng.random_range(0.0..=per_gap)
                }
            }
            .clamp(0.0, 1.0);
        }
        let err = (sum / tau as f64 - current).abs();
        worst_err = worst_err.max(err);
        if err >= radius {
            misses += 1;
        }
    }
    let rate = misses as f64 / replications as f64;
    let allowed = budget + 3.0 * binomial_se(budget, replications);
    CheckReport::new(
        "drift_coverage",
        allowed - rate,
        format!(
            "tau = {tau}, t = {t}, {pattern:?} drift: miss rate {rate:.4e} vs budget {budget:.4e} \
             (+3 se = {allowed:.4e}); radius {radius:.4}, worst |error| {worst_err:.4}"
        ),
        replications * tau as u64,
    )
}

/// `sum_{i <= k} sum_{t <= t_max} 6 delta2 / (k pi^2 t^2)`, which the union
/// bound keeps below `delta2`.
pub fn coverage_budget_sum(num_arms: usize, t_max: u64, delta2: f64) -> f64 {
    let k = num_arms as f64;
    let per_arm: f64 = (1..=t_max).map(|t| 6.0 * delta2 / (k * PI * PI * (t as f64).powi(2))).sum();
    k * per_arm
}

/// Union-bound check: the per-(arm, time) budgets up to `t_max` sum below `delta2`.
pub fn check_coverage_budget(num_arms: usize, t_max: u64, delta2: f64) -> CheckReport {
    let sum = coverage_budget_sum(num_arms, t_max, delta2);
    CheckReport::new(
        "coverage_union_bound",
        delta2 - sum,
        format!("k = {num_arms}, t <= {t_max}: total {sum:.6e} vs delta2 {delta2:.6e}"),
        t_max,
    )
}

/// Window lengths and times exercised by [`lemma_suite`].
pub const SUITE_WINDOWS: [usize; 3] = [5, 20, 100];

/// Every numerical check at the hyperparameters `hp`: the two analytic grids,
/// the spread simulation, the coverage simulation for each window length and
/// drift pattern, and the union bound.
pub fn lemma_suite(hp: &Hyperparams, replications: u64, seed: u64) -> Result<Vec<CheckReport>> {
    let mut out = vec![check_exploration_inequality(100_000), check_epsilon_bound(100_000)?];
    out.push(check_sampling_spread(hp, replications, seed)?);
    let t = hp.horizon / 2;
    for (i, &tau) in SUITE_WINDOWS.iter().enumerate() {
        for (j, pattern) in [DriftPattern::None, DriftPattern::Adversarial, DriftPattern::Random].into_iter().enumerate() {
            let s = seed.wrapping_add(1 + 3 * i as u64 + j as u64);
            out.push(check_hoeffding_coverage(tau, t.max(1), hp, pattern, replications, s));
        }
    }
    out.push(check_coverage_budget(hp.num_arms, hp.horizon, hp.delta2));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperparams::{derive_hyperparams, Overrides};

    fn iv(a: f64, b: f64) -> ConfidenceInterval {
        ConfidenceInterval { lower: a, upper: b, center: 0.5 * (a + b), radius: 0.5 * (b - a), window: 1 }
    }

    #[test]
    fn brute_force_small_cases() {
        let disjoint = [iv(0.0, 0.1), iv(0.2, 0.3), iv(0.6, 0.7)];
        assert_eq!(brute_force_active_set(&disjoint), vec![2]);
        assert_eq!(closure_active_set(&disjoint), vec![2]);
        let nested = [iv(0.3, 0.4), iv(0.0, 1.0), iv(0.8, 0.9), iv(0.05, 0.06)];
        assert_eq!(brute_force_active_set(&nested), vec![0, 1, 2, 3]);
        assert_eq!(closure_active_set(&nested), vec![0, 1, 2, 3]);
    }

    #[test]
    fn pairwise_definition() {
        assert!(pairwise_fairness_violation(&[0.9, 0.1], &[0.2, 0.3]));
        assert!(!pairwise_fairness_violation(&[0.5, 0.5], &[0.2, 0.3]));
    }

    #[test]
    fn exploration_inequality_boundaries() {
        assert_eq!(exploration_lhs(0.0, 7.0), 1.0);
        let limit = exploration_lhs(0.5, 1e12);
        assert!((limit - (-0.5f64).exp()).abs() < 1e-9);
        assert!(limit <= 1.0 - 7.0 / 18.0);
        let r = check_exploration_inequality(200);
        assert!(r.passed, "{r:?}");
        assert!(r.margin > 0.0);
    }

    #[test]
    fn epsilon_floor_grid() {
        let r = check_epsilon_bound(20_000).unwrap();
        assert!(r.passed, "{r:?}");
        let v15 = epsilon_floor(15.0).unwrap();
        assert!(v15 < crate::hyperparams::epsilon_floor_max() && v15 > 0.373);
        assert!(epsilon_floor(1e9).unwrap() < 0.15);
    }

    #[test]
    fn always_sampled_never_fails() {
        assert_eq!(spread_failures(1000, 1, 1.0, 10, 50, 1), 0);
    }

    #[test]
    fn longer_blocks_fail_less() {
        // common random numbers: a doubled block misses only if both halves miss
        let short = spread_failures(200, 4, 0.05, 50, 400, 11);
        let long = spread_failures(200, 4, 0.05, 100, 400, 11);
        assert!(long < short, "{long} vs {short}");
    }

    #[test]
    fn spread_default_case() {
        let hp = derive_hyperparams(10_000, 2.0, 5, &Overrides::default()).unwrap();
        let r = check_sampling_spread(&hp, 300, 4).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn union_budget_below_delta2() {
        let total = coverage_budget_sum(10, 1000, 0.1);
        assert!(total <= 0.1, "{total}");
        assert!(total > 0.099 * 6.0 / (PI * PI));
    }

    #[test]
    fn drift_aware_radius_matches_core_radius() {
        let hp = derive_hyperparams(10_000, 1.0, 5, &Overrides::default()).unwrap();
        let (_, r) = drift_aware_radius(7, 300, &hp);
        let core = crate::interval::confidence_radius(7, 300, &hp).unwrap();
        assert!((r - core).abs() < 1e-12);
    }

    #[test]
    fn stationary_drift_coverage() {
        let hp = derive_hyperparams(10_000, 1.0, 5, &Overrides::default()).unwrap();
        let r = check_hoeffding_coverage(1, 1, &hp, DriftPattern::None, 500, 2);
        assert!(r.passed, "{r:?}");
    }
}
