//! Closed-form quantum predictions for the two experiments.
//!
//! Transmission through a polarizing cube follows the cos² law. Every model
//! and estimator in the crate is checked against these tables.

use crate::domain::{Angle, ChannelBit, ErutanPolicy, JointDistribution, Settings, ANGLE_TOLERANCE};

/// `cos²(theta)` for `theta` in degrees, exact at multiples of 90°.
pub fn cos_squared_deg(theta: f64) -> f64 {
    let d = theta.rem_euclid(180.0);
    if d <= ANGLE_TOLERANCE || 180.0 - d <= ANGLE_TOLERANCE {
        return 1.0;
    }
    if (d - 90.0).abs() <= ANGLE_TOLERANCE {
        return 0.0;
    }
    0.5 * (1.0 + (2.0 * d).to_radians().cos())
}

/// Probability that a photon polarized along `tau` leaves a cube set at
/// `beta` on the aligned channel.
pub fn malus(tau: Angle, beta: Angle) -> f64 {
    cos_squared_deg(tau.minus(beta))
}

/// The polarization a cube set at `setting` imposes on a photon that leaves
/// (or enters) on channel `bit`.
pub fn channel_polarization(setting: Angle, bit: ChannelBit) -> Angle {
    match bit {
        ChannelBit::Aligned => setting,
        ChannelBit::Perpendicular => setting.perpendicular(),
    }
}

/// Joint outcome table of the entangled two-photon experiment.
pub fn two_photon_joint(s: Settings) -> JointDistribution {
    let c = cos_squared_deg(s.relative());
    let same = 0.5 * c;
    let diff = 0.5 * (1.0 - c);
    JointDistribution { p: [[same, diff], [diff, same]], counts: None }
}

/// Joint table of (input channel A', Bob's output B) in the one-photon
/// experiment with the hidden randomizer set to `policy`.
pub fn one_photon_joint(s: Settings, policy: ErutanPolicy) -> JointDistribution {
    // cos²(θ + 90°) = 1 - cos²(θ); taking the complement keeps the marginals exact.
    let aligned_pass = malus(s.alpha, s.beta);
    let mut p = [[0.0; 2]; 2];
    for (left, pass) in [(ChannelBit::Perpendicular, 1.0 - aligned_pass), (ChannelBit::Aligned, aligned_pass)] {
        let prior = policy.prob(left);
        p[left.index()][1] = prior * pass;
        p[left.index()][0] = prior * (1.0 - pass);
    }
    JointDistribution { p, counts: None }
}

/// Correlator `P(same) - P(different)` of the two-photon experiment.
pub fn correlation_e(s: Settings) -> f64 {
    (2.0 * s.relative()).to_radians().cos()
}

/// P(B = 1) in the one-photon experiment.
pub fn bob_marginal(s: Settings, policy: ErutanPolicy) -> f64 {
    0.5 + (policy.bias_p() - 0.5) * correlation_e(s)
}
