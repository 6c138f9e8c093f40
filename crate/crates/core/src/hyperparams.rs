//! Run constants for Fair-UCBe and the constraint system that ties them to
//! the horizon `T` and drift exponent `kappa`.
//!
//! Only strict inequalities constrain `epsilon` and `alpha`, so the default
//! derivation sits just inside them: `epsilon` a relative `1e-3` above its
//! floor, `alpha` at 99% of its ceiling. Both can be overridden.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `ln(18/11)`, the base constant of the sampling-spread bound.
pub fn ln_18_11() -> f64 {
    (18.0f64 / 11.0).ln()
}

/// Lower bound on `epsilon` required for every arm to be sampled in every
/// block of length `k * T^(alpha/2 + epsilon)`:
///
/// `(1 / ln T) * ln( ln T / (2 ln(18/11)) )`
///
/// Negative for small `ln T / (2 ln(18/11)) < 1` (T below ~2.67) and for no
/// `T >= 2` above `1 / (2e ln(18/11)) ~= 0.3735`.
pub fn epsilon_floor(horizon: f64) -> Result<f64> {
    if !(horizon >= 2.0) || !horizon.is_finite() {
        return Err(Error::InvalidHorizon(horizon));
    }
    let log_t = horizon.ln();
    Ok((log_t / (2.0 * ln_18_11())).ln() / log_t)
}

/// The global maximum of [`epsilon_floor`], `1 / (2e ln(18/11))`.
pub fn epsilon_floor_max() -> f64 {
    1.0 / (2.0 * std::f64::consts::E * ln_18_11())
}

/// Optional user choices layered over the default derivation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    pub epsilon: Option<f64>,
    pub alpha: Option<f64>,
    pub delta2: Option<f64>,
    /// Allow `epsilon` at or below its floor when the strict system has no
    /// solution (small `kappa`). The resulting run loses the spread guarantee
    /// and is flagged via [`Hyperparams::epsilon_floor_waived`].
    #[serde(default)]
    pub relax_epsilon: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub horizon: u64,
    pub kappa: f64,
    pub num_arms: usize,
    pub epsilon: f64,
    pub alpha: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub explore_prob: f64,
    pub sufficiency_m: f64,
    pub epsilon_floor_waived: bool,
}

impl Hyperparams {
    /// `T^(-alpha/2)`: exploration probability, `delta1` and default `delta2`.
    pub fn base_delta(horizon: u64, alpha: f64) -> f64 {
        (horizon as f64).powf(-alpha / 2.0)
    }

    /// Upper limit on `alpha` for a given `epsilon` and `kappa`.
    pub fn alpha_ceiling(epsilon: f64, kappa: f64) -> f64 {
        (2.0 - (2.0 * epsilon + 1.0).sqrt())
            .min((kappa - epsilon) / 2.0)
            .min(1.0)
    }

    /// Fairness level guaranteed under these constants, `delta1 + delta2`.
    pub fn delta(&self) -> f64 {
        self.delta1 + self.delta2
    }

    /// Exponent of `T` in the drift-compensation term, `alpha/2 + epsilon - kappa`.
    pub fn drift_exponent(&self) -> f64 {
        self.alpha / 2.0 + self.epsilon - self.kappa
    }

    /// Checks every constraint and names the first one that fails.
    pub fn validate(&self) -> Result<()> {
        let t = self.horizon as f64;
        if self.horizon < 2 {
            return Err(Error::InvalidHorizon(t));
        }
        if self.num_arms < 2 {
            return Err(Error::InvalidArmCount(self.num_arms));
        }
        let check = |ok: bool, what: String| if ok { Ok(()) } else { Err(Error::Constraint(what)) };
        check(
            self.kappa > 0.0 && self.kappa.is_finite(),
            format!("kappa > 0 (kappa = {})", self.kappa),
        )?;
        check(
            self.epsilon > 0.0 && self.epsilon < 1.0,
            format!("0 < epsilon < 1 (epsilon = {})", self.epsilon),
        )?;
        if !self.epsilon_floor_waived {
            let floor = epsilon_floor(t)?;
            check(
                self.epsilon > floor,
                format!(
                    "epsilon > ln(ln T / (2 ln(18/11))) / ln T (epsilon = {}, floor = {floor})",
                    self.epsilon
                ),
            )?;
        }
        check(
            self.alpha > 0.0 && self.alpha < 1.0,
            format!("0 < alpha < 1 (alpha = {})", self.alpha),
        )?;
        let sqrt_bound = 2.0 - (2.0 * self.epsilon + 1.0).sqrt();
        check(
            self.alpha < sqrt_bound,
            format!("alpha < 2 - sqrt(2 epsilon + 1) (alpha = {}, bound = {sqrt_bound})", self.alpha),
        )?;
        let drift_bound = (self.kappa - self.epsilon) / 2.0;
        check(
            self.alpha < drift_bound,
            format!("alpha < (kappa - epsilon) / 2 (alpha = {}, bound = {drift_bound})", self.alpha),
        )?;
        check(
            self.kappa > 2.0 * self.alpha + self.epsilon,
            "kappa > 2 alpha + epsilon".to_string(),
        )?;
        check(
            self.explore_prob > 0.0 && self.explore_prob <= 1.0,
            format!("0 < explore_prob <= 1 (explore_prob = {})", self.explore_prob),
        )?;
        check(
            self.delta2 > 0.0 && self.delta2 <= 1.0,
            format!("0 < delta2 <= 1 (delta2 = {})", self.delta2),
        )?;
        Ok(())
    }
}

/// Derives a full set of run constants from `T`, `kappa` and `k`.
pub fn derive_hyperparams(
    horizon: u64,
    kappa: f64,
    num_arms: usize,
    overrides: &Overrides,
) -> Result<Hyperparams> {
    if horizon < 2 {
        return Err(Error::InvalidHorizon(horizon as f64));
    }
    if num_arms < 2 {
        return Err(Error::InvalidArmCount(num_arms));
    }
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::Constraint(format!("kappa > 0 (kappa = {kappa})")));
    }
    let floor = epsilon_floor(horizon as f64)?;

    let (epsilon, waived) = match overrides.epsilon {
        Some(eps) => (eps, overrides.relax_epsilon && eps <= floor),
        None => {
            let strict = (floor * (1.0 + 1e-3)).max(1e-6);
            if strict < kappa {
                (strict, false)
            } else if overrides.relax_epsilon {
                (kappa / 3.0, true)
            } else {
                return Err(Error::Infeasible(format!(
                    "kappa = {kappa} <= epsilon floor {floor} at T = {horizon}: \
                     no alpha satisfies alpha < (kappa - epsilon) / 2"
                )));
            }
        }
    };

    let alpha = match overrides.alpha {
        Some(a) => a,
        None => {
            let ceiling = Hyperparams::alpha_ceiling(epsilon, kappa);
            if ceiling <= 0.0 {
                return Err(Error::Infeasible(format!(
                    "alpha ceiling min{{2 - sqrt(2 eps + 1), (kappa - eps) / 2, 1}} = {ceiling} <= 0 \
                     (epsilon = {epsilon}, kappa = {kappa})"
                )));
            }
            0.99 * ceiling
        }
    };

    let base = Hyperparams::base_delta(horizon, alpha);
    let hp = Hyperparams {
        horizon,
        kappa,
        num_arms,
        epsilon,
        alpha,
        delta1: base,
        delta2: overrides.delta2.unwrap_or(base),
        explore_prob: base,
        sufficiency_m: (horizon as f64).powf((alpha / 2.0 + epsilon) / (1.0 - alpha)),
        epsilon_floor_waived: waived,
    };
    hp.validate()?;
    Ok(hp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_peaks_at_known_point() {
        let t_star = (2.0 * std::f64::consts::E * ln_18_11()).exp();
        let v = epsilon_floor(t_star).unwrap();
        assert!((v - 0.3735).abs() < 1e-4, "{v}");
        assert!((v - epsilon_floor_max()).abs() < 1e-12);
        // printed value in the appendix is 14.5669; the closed form gives 14.5469
        assert!((t_star - 14.5669).abs() < 0.5);
    }

    #[test]
    fn floor_at_one_million_matches_high_precision() {
        // mpmath, 40 digits: 0.19115857415040101883...
        let v = epsilon_floor(1e6).unwrap();
        assert!((v - 0.191_158_574_150_401).abs() < 1e-13, "{v}");
        assert!(v < 0.3735);
    }

    #[test]
    fn floor_rejects_small_horizon() {
        assert!(matches!(epsilon_floor(1.5), Err(Error::InvalidHorizon(_))));
        assert!(epsilon_floor(2.0).is_ok());
    }

    #[test]
    fn default_derivation_is_valid() {
        let hp = derive_hyperparams(1_000_000, 2.0, 10, &Overrides::default()).unwrap();
        hp.validate().unwrap();
        assert!(!hp.epsilon_floor_waived);
        assert_eq!(hp.delta1, hp.delta2);
        assert_eq!(hp.delta1, hp.explore_prob);
        assert!(hp.kappa > 2.0 * hp.alpha + hp.epsilon);
    }

    #[test]
    fn frozen_values_t1e7_kappa1() {
        // mpmath: eps = 0.17358744753822176, alpha = 0.40907421346858022
        let hp = derive_hyperparams(10_000_000, 1.0, 10, &Overrides::default()).unwrap();
        assert!((hp.epsilon - 0.173_587_447_538_221_76).abs() < 1e-12);
        assert!((hp.alpha - 0.409_074_213_468_580_22).abs() < 1e-12);
    }

    #[test]
    fn tiny_kappa_is_infeasible() {
        let err = derive_hyperparams(1_000_000, 1e-9, 10, &Overrides::default()).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
        assert!(err.is_constraint());
    }

    #[test]
    fn sweep_kappas_at_1e7() {
        for kappa in [0.2, 0.5, 1.0] {
            derive_hyperparams(10_000_000, kappa, 10, &Overrides::default()).unwrap();
        }
        // kappa = 0.1 sits below the strict floor (0.1734) and needs the relaxed mode
        assert!(derive_hyperparams(10_000_000, 0.1, 10, &Overrides::default()).is_err());
        let relaxed = Overrides { relax_epsilon: true, ..Default::default() };
        let hp = derive_hyperparams(10_000_000, 0.1, 10, &relaxed).unwrap();
        assert!(hp.epsilon_floor_waived);
        assert!((hp.epsilon - 0.1 / 3.0).abs() < 1e-15);
        // relax does nothing when the strict system is solvable
        let hp = derive_hyperparams(10_000_000, 0.5, 10, &relaxed).unwrap();
        assert!(!hp.epsilon_floor_waived);
    }

    #[test]
    fn overrides_are_validated() {
        let ok = Overrides { epsilon: Some(0.4), alpha: Some(0.5), ..Default::default() };
        let hp = derive_hyperparams(10_000, 2.0, 10, &ok).unwrap();
        assert!((hp.delta2 - 0.1).abs() < 1e-15);

        let bad_alpha = Overrides { alpha: Some(0.95), ..Default::default() };
        let err = derive_hyperparams(10_000, 2.0, 10, &bad_alpha).unwrap_err();
        assert!(err.to_string().contains("2 - sqrt(2 epsilon + 1)"), "{err}");

        let bad_eps = Overrides { epsilon: Some(0.1), ..Default::default() };
        let err = derive_hyperparams(10_000, 2.0, 10, &bad_eps).unwrap_err();
        assert!(err.to_string().contains("floor"), "{err}");
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(matches!(
            derive_hyperparams(1, 1.0, 10, &Overrides::default()),
            Err(Error::InvalidHorizon(_))
        ));
        assert!(matches!(
            derive_hyperparams(100, 1.0, 1, &Overrides::default()),
            Err(Error::InvalidArmCount(1))
        ));
        assert!(matches!(
            derive_hyperparams(100, -1.0, 2, &Overrides::default()),
            Err(Error::Constraint(_))
        ));
    }
}
