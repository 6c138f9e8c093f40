//! Sliding-window confidence intervals.
//!
//! The radius has two parts: a Hoeffding term for sampling noise and a
//! drift-compensation term for the bias accumulated while the mean moved
//! during the window.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperparams::Hyperparams;
use crate::state::PolicyState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub center: f64,
    pub radius: f64,
    /// Number of samples behind the estimate; 0 only for the prior `[0, 1]`.
    pub window: usize,
}

impl ConfidenceInterval {
    /// The uninformed interval used for arms without samples.
    pub fn prior() -> Self {
        ConfidenceInterval {
            lower: 0.0,
            upper: 1.0,
            center: 0.5,
            radius: f64::INFINITY,
            window: 0,
        }
    }

    /// `[center - radius, center + radius] ∩ [0, 1]`.
    pub fn clipped(center: f64, radius: f64, window: usize) -> Self {
        ConfidenceInterval {
            lower: (center - radius).max(0.0),
            upper: (center + radius).min(1.0),
            center,
            radius,
            window,
        }
    }

    pub fn is_prior(&self) -> bool {
        self.window == 0
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// Number of latest samples used at timestep `t`: `min(available, ceil(t^alpha / k))`.
pub fn window_length(t: u64, available: usize, num_arms: usize, alpha: f64) -> usize {
    let target = ((t as f64).powf(alpha) / num_arms as f64).ceil() as usize;
    available.min(target)
}

/// `sqrt( ln(k pi^2 t^2 / (3 delta2)) / (2 tau) )`. Requires `tau >= 1`.
pub fn hoeffding_term(tau: usize, t: u64, num_arms: usize, delta2: f64) -> f64 {
    let t = t as f64;
    let log_arg = num_arms as f64 * PI * PI * t * t / (3.0 * delta2);
    (log_arg.ln() / (2.0 * tau as f64)).sqrt()
}

/// `k T^(alpha/2 + epsilon - kappa) (tau + 3) / 2`.
pub fn drift_term(tau: usize, hp: &Hyperparams) -> f64 {
    hp.num_arms as f64 * (hp.horizon as f64).powf(hp.drift_exponent()) * (tau as f64 + 3.0) / 2.0
}

/// Full radius `c_i`, Hoeffding term plus drift compensation.
pub fn confidence_radius(tau: usize, t: u64, hp: &Hyperparams) -> Result<f64> {
    if tau == 0 {
        return Err(Error::NoSamples);
    }
    Ok(hoeffding_term(tau, t, hp.num_arms, hp.delta2) + drift_term(tau, hp))
}

/// Per-arm sliding-window intervals at timestep `t`.
pub fn build_intervals(state: &PolicyState, t: u64, hp: &Hyperparams) -> Vec<ConfidenceInterval> {
    state
        .buffers()
        .iter()
        .map(|buf| {
            let tau = window_length(t, buf.len(), hp.num_arms, hp.alpha);
            match buf.window_mean(tau) {
                None => ConfidenceInterval::prior(),
                Some(mean) => {
                    let radius = hoeffding_term(tau, t, hp.num_arms, hp.delta2) + drift_term(tau, hp);
                    ConfidenceInterval::clipped(mean, radius, tau)
                }
            }
        })
        .collect()
}
