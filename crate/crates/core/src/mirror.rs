//! Reflection of the two-photon experiment into the one-photon experiment,
//! and checks that the two agree.
//!
//! The reflection turns Alice's outputs `A` into Ecila's inputs `A'` and
//! replaces Nature's random choice of output with the unbiased randomizer.
//! Settings carry over unchanged.

use serde::Serialize;

use crate::domain::{Angle, ErutanPolicy, JointDistribution, Settings};
use crate::error::{Error, Result};
use crate::models::{count_batch, sample_trial, ModelKind};
use crate::oracle::{malus, one_photon_joint, two_photon_joint};
use crate::rng::Seed;

pub fn mirror_to_one_photon(two_photon: Settings) -> (Settings, ErutanPolicy) {
    (two_photon, ErutanPolicy::UNBIASED)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub total_variation_distance: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn equivalence_check(left: &JointDistribution, right: &JointDistribution, tol: f64) -> Result<EquivalenceReport> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let tv = left.total_variation(right);
    Ok(EquivalenceReport { total_variation_distance: tv, tolerance: tol, pass: tv <= tol })
}

/// Closed-form comparison of the two experiments at `s`.
pub fn analytic_equivalence(s: Settings, tol: f64) -> Result<EquivalenceReport> {
    let (mirrored, policy) = mirror_to_one_photon(s);
    equivalence_check(&two_photon_joint(s), &one_photon_joint(mirrored, policy), tol)
}

/// Sampled comparison: `n` zigzag trials against `n` independent one-photon
/// trials (seeds `seed.derive(0)` and `seed.derive(1)`).
pub fn empirical_equivalence(s: Settings, n: u64, seed: Seed, tol: f64) -> Result<EquivalenceReport> {
    let (mirrored, policy) = mirror_to_one_photon(s);
    let zigzag = JointDistribution::from_counts(count_batch(&ModelKind::SingleTauZigzag, s, n, seed.derive(0))?)?;
    let one = JointDistribution::from_counts(count_batch(&ModelKind::OnePhoton { policy }, mirrored, n, seed.derive(1))?)?;
    equivalence_check(&zigzag, &one, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CounterfactualConfig {
    pub alpha_from: Angle,
    pub alpha_to: Angle,
    pub beta: Angle,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterfactualReport {
    pub config: CounterfactualConfig,
    pub trials: u64,
    pub agreeing_trials: u64,
    pub agreement_rate: f64,
    /// Index of the first disagreeing trial, if any.
    pub first_disagreement: Option<u64>,
}

/// Re-runs each trial with Alice's (and Ecila's) setting changed while the
/// trial's randomness is held fixed.
///
/// A trial agrees when, in both experiments, the left bit is unchanged, τ
/// moves by exactly the change in setting, and Bob's transmission
/// probability (and outcome) is the same in the zigzag and one-photon runs.
pub fn zigzag_counterfactual_check(cfg: CounterfactualConfig, n_trials: u64, seed: Seed) -> Result<CounterfactualReport> {
    if n_trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let one = ModelKind::OnePhoton { policy: ErutanPolicy::UNBIASED };
    let before = Settings::new(cfg.alpha_from, cfg.beta);
    let after = Settings::new(cfg.alpha_to, cfg.beta);
    let shift = cfg.alpha_to.minus(cfg.alpha_from);
    let mut agreeing = 0;
    let mut first_disagreement = None;
    for i in 0..n_trials {
        let z0 = sample_trial(&ModelKind::SingleTauZigzag, before, i, seed)?;
        let z1 = sample_trial(&ModelKind::SingleTauZigzag, after, i, seed)?;
        let o0 = sample_trial(&one, before, i, seed)?;
        let o1 = sample_trial(&one, after, i, seed)?;
        let (Some(tz0), Some(tz1), Some(to0), Some(to1)) = (z0.tau_a, z1.tau_a, o0.tau_a, o1.tau_a) else {
            return Err(Error::InvalidParameter("zigzag and one-photon trials must carry tau".into()));
        };
        let ok = z0.left_bit == z1.left_bit
            && o0.left_bit == o1.left_bit
            && z0.left_bit == o0.left_bit
            && tz0.rotate(shift).approx_eq(tz1)
            && to0.rotate(shift).approx_eq(to1)
            && tz1.approx_eq(to1)
            && malus(tz0, cfg.beta) == malus(to0, cfg.beta)
            && malus(tz1, cfg.beta) == malus(to1, cfg.beta)
            && z0.right_bit == o0.right_bit
            && z1.right_bit == o1.right_bit;
        if ok {
            agreeing += 1;
        } else if first_disagreement.is_none() {
            first_disagreement = Some(i);
        }
    }
    Ok(CounterfactualReport {
        config: cfg,
        trials: n_trials,
        agreeing_trials: agreeing,
        agreement_rate: agreeing as f64 / n_trials as f64,
        first_disagreement,
    })
}
