//! Evidential probabilities: conditioning the exact joint tables on what an
//! observer knows about either end of the experiment.
//!
//! Probabilities are always conditional on the hypothesized settings. When an
//! outcome bit is known but the setting that produced it is not, that setting
//! is averaged out under a uniform prior on the polarization circle.

use serde::Serialize;

use crate::domain::{Angle, ChannelBit, ErutanPolicy, JointDistribution, KnowledgeState, Settings};
use crate::error::{Error, Result};
use crate::oracle::{one_photon_joint, two_photon_joint};

/// Which experiment's joint table the evidence is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum Reading {
    OnePhoton { policy: ErutanPolicy },
    TwoPhoton,
}

impl Reading {
    fn joint(self, s: Settings) -> JointDistribution {
        match self {
            Reading::OnePhoton { policy } => one_photon_joint(s, policy),
            Reading::TwoPhoton => two_photon_joint(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conditional {
    /// Posterior over `(left bit, right bit)`; known bits are degenerate.
    pub joint: JointDistribution,
    pub p_left_aligned: f64,
    pub p_right_aligned: f64,
    /// Prior probability of the observed bits.
    pub evidence_probability: f64,
}

// Eight equally spaced rotations integrate any cos²-type table exactly over the
// polarization circle.
const SETTING_QUADRATURE: usize = 8;

fn check_known_setting(known: Option<Angle>, actual: Angle, name: &str) -> Result<()> {
    match known {
        Some(k) if !k.polarization_equivalent(actual) => Err(Error::InconsistentEvidence(format!(
            "known {name} = {k} but the settings under consideration have {name} = {actual}"
        ))),
        _ => Ok(()),
    }
}

/// Posterior over the unknown bits of the one-photon experiment.
pub fn condition(s: Settings, policy: ErutanPolicy, k: &KnowledgeState) -> Result<Conditional> {
    condition_reading(Reading::OnePhoton { policy }, s, k)
}

pub fn condition_reading(reading: Reading, s: Settings, k: &KnowledgeState) -> Result<Conditional> {
    check_known_setting(k.known_alpha, s.alpha, "alpha")?;
    check_known_setting(k.known_beta, s.beta, "beta")?;

    let hide_alpha = k.known_left_bit.is_some() && k.known_alpha.is_none();
    let hide_beta = k.known_right_bit.is_some() && k.known_beta.is_none();
    let alpha_shifts: Vec<f64> = if hide_alpha { quadrature() } else { vec![0.0] };
    let beta_shifts: Vec<f64> = if hide_beta { quadrature() } else { vec![0.0] };

    let weight = 1.0 / (alpha_shifts.len() * beta_shifts.len()) as f64;
    let mut prior = [[0.0; 2]; 2];
    for &da in &alpha_shifts {
        for &db in &beta_shifts {
            let j = reading.joint(Settings::new(s.alpha.rotate(da), s.beta.rotate(db)));
            for (acc, v) in prior.iter_mut().flatten().zip(j.p.iter().flatten()) {
                *acc += weight * v;
            }
        }
    }

    let mut post = prior;
    for a in [ChannelBit::Perpendicular, ChannelBit::Aligned] {
        for b in [ChannelBit::Perpendicular, ChannelBit::Aligned] {
            let keep = k.known_left_bit.is_none_or(|x| x == a) && k.known_right_bit.is_none_or(|x| x == b);
            if !keep {
                post[a.index()][b.index()] = 0.0;
            }
        }
    }
    let evidence = k.known_left_bit.is_some() || k.known_right_bit.is_some();
    let mass: f64 = if evidence { post.iter().flatten().sum() } else { 1.0 };
    if mass <= 0.0 {
        return Err(Error::InconsistentEvidence("the known outcomes have zero probability at these settings".into()));
    }
    if evidence {
        for v in post.iter_mut().flatten() {
            *v /= mass;
        }
    }
    let joint = JointDistribution { p: post, counts: None };
    Ok(Conditional {
        p_left_aligned: joint.left_aligned(),
        p_right_aligned: joint.right_aligned(),
        joint,
        evidence_probability: mass,
    })
}

fn quadrature() -> Vec<f64> {
    (0..SETTING_QUADRATURE).map(|i| 180.0 * i as f64 / SETTING_QUADRATURE as f64).collect()
}

/// `P(target | given)` indexed `[given][target]`, given the left bit.
pub fn right_given_left(j: &JointDistribution) -> [[f64; 2]; 2] {
    j.p.map(|row| {
        let total = row[0] + row[1];
        row.map(|v| v / total)
    })
}

/// `P(target | given)` indexed `[given][target]`, given the right bit.
pub fn left_given_right(j: &JointDistribution) -> [[f64; 2]; 2] {
    right_given_left(&j.transposed())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSymmetryReport {
    pub pairs_checked: usize,
    pub max_deviation: f64,
    /// Pair with the largest nonzero deviation.
    pub worst_pair: Option<Settings>,
}

/// Compares forward updating `P(B=b | A'=a', α, β)` with backward updating
/// `P(A'=a' | B=b)` at the settings whose `β - α` equals the forward `α - β`,
/// for every pair on `grid` with the unbiased randomizer.
pub fn time_symmetry_check(grid: &[Angle]) -> TimeSymmetryReport {
    let policy = ErutanPolicy::UNBIASED;
    let mut max_dev = 0.0f64;
    let mut worst = None;
    let mut pairs = 0;
    for &alpha in grid {
        for &beta in grid {
            let s = Settings::new(alpha, beta);
            let forward = right_given_left(&one_photon_joint(s, policy));
            let backward = left_given_right(&one_photon_joint(Settings::new(beta, alpha), policy));
            for a in 0..2 {
                for b in 0..2 {
                    let d = (forward[a][b] - backward[b][a]).abs();
                    if d > max_dev {
                        max_dev = d;
                        worst = Some(s);
                    }
                }
            }
            pairs += 1;
        }
    }
    TimeSymmetryReport { pairs_checked: pairs, max_deviation: max_dev, worst_pair: worst }
}
