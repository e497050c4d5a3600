//! Sampleable hidden-variable models.
//!
//! Each trial consumes at most two uniforms from its own counter-based stream:
//! draw 0 decides the left bit (or, for the two-τ model, the joint cell),
//! draw 1 decides Bob's bit. Models that share this schema share their
//! randomness trial by trial, which is what the counterfactual checks rely on.

use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{
    Angle, ChannelBit, Counts, ErutanPolicy, Experiment, LocalStrategy, ModelId, Settings, TrialRecord,
};
use crate::error::{Error, Result};
use crate::oracle::{channel_polarization, malus, two_photon_joint};
use crate::rng::Seed;

/// Largest setting list per side accepted by [`enumerate_local_strategies`].
pub const MAX_ENUMERATED_SETTINGS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelKind {
    /// Pre-agreed instruction sets carried by the particles.
    LocalDeterministic { strategy: LocalStrategy },
    /// One polarization τ, fixed by Alice's setting and output and constant
    /// along the whole path back to the source and out to Bob.
    SingleTauZigzag,
    /// Alice controls τ_a and Bob controls τ_b; outcomes follow the quantum joint.
    TwoTauSymmetric,
    /// Ecila's cube fed by the hidden randomizer, photon travelling to Bob.
    OnePhoton { policy: ErutanPolicy },
}

impl ModelKind {
    pub fn one_photon(bias_p: f64) -> Result<Self> {
        Ok(ModelKind::OnePhoton { policy: ErutanPolicy::new(bias_p)? })
    }

    pub fn id(&self) -> ModelId {
        match self {
            ModelKind::LocalDeterministic { .. } => ModelId::LocalDeterministic,
            ModelKind::SingleTauZigzag => ModelId::Zigzag,
            ModelKind::TwoTauSymmetric => ModelId::TwoTau,
            ModelKind::OnePhoton { .. } => ModelId::OnePhoton,
        }
    }

    pub fn experiment(&self) -> Experiment {
        match self {
            ModelKind::OnePhoton { .. } => Experiment::OnePhoton,
            _ => Experiment::TwoPhoton,
        }
    }

    /// Checks that the model can run at `s`.
    pub fn validate(&self, s: &Settings) -> Result<()> {
        match self {
            ModelKind::LocalDeterministic { strategy } => strategy.covers(s),
            _ => Ok(()),
        }
    }
}

/// Draws a single trial. Pure in `(model, s, trial_index, seed)`.
pub fn sample_trial(model: &ModelKind, s: Settings, trial_index: u64, seed: Seed) -> Result<TrialRecord> {
    let mut rng = seed.trial(trial_index);
    let (left_bit, right_bit, tau_a, tau_b) = match model {
        ModelKind::LocalDeterministic { strategy } => {
            (strategy.left_bit(s.alpha)?, strategy.right_bit(s.beta)?, None, None)
        }
        ModelKind::SingleTauZigzag => {
            let a = ChannelBit::from_bool(rng.bernoulli(0.5));
            let tau = channel_polarization(s.alpha, a);
            let b = ChannelBit::from_bool(rng.bernoulli(malus(tau, s.beta)));
            (a, b, Some(tau), None)
        }
        ModelKind::OnePhoton { policy } => {
            let a = ChannelBit::from_bool(rng.bernoulli(policy.bias_p()));
            let tau = channel_polarization(s.alpha, a);
            let b = ChannelBit::from_bool(rng.bernoulli(malus(tau, s.beta)));
            (a, b, Some(tau), None)
        }
        ModelKind::TwoTauSymmetric => {
            let (a, b) = sample_cell(&two_photon_joint(s).p, rng.uniform());
            (a, b, Some(channel_polarization(s.alpha, a)), Some(channel_polarization(s.beta, b)))
        }
    };
    Ok(TrialRecord {
        experiment: model.experiment(),
        model: model.id(),
        trial_index,
        alpha: s.alpha,
        beta: s.beta,
        left_bit,
        right_bit,
        tau_a,
        tau_b,
    })
}

/// Inverse-CDF draw of one cell of a 2x2 table, cells taken in row-major order.
fn sample_cell(p: &[[f64; 2]; 2], u: f64) -> (ChannelBit, ChannelBit) {
    let mut acc = 0.0;
    let mut last = (ChannelBit::Perpendicular, ChannelBit::Perpendicular);
    for a in [ChannelBit::Perpendicular, ChannelBit::Aligned] {
        for b in [ChannelBit::Perpendicular, ChannelBit::Aligned] {
            let cell = p[a.index()][b.index()];
            if cell <= 0.0 {
                continue;
            }
            acc += cell;
            last = (a, b);
            if u < acc {
                return last;
            }
        }
    }
    // only reachable through rounding when u is within an ulp of 1
    last
}

/// Trials `0..n` in index order. Output does not depend on the thread count.
pub fn run_batch(model: &ModelKind, s: Settings, n: u64, seed: Seed) -> Result<Vec<TrialRecord>> {
    model.validate(&s)?;
    (0..n).into_par_iter().map(|i| sample_trial(model, s, i, seed)).collect()
}

/// Cell counts of `n` trials without materializing the records.
pub fn count_batch(model: &ModelKind, s: Settings, n: u64, seed: Seed) -> Result<Counts> {
    model.validate(&s)?;
    (0..n)
        .into_par_iter()
        .map(|i| sample_trial(model, s, i, seed))
        .try_fold(
            || [[0u64; 2]; 2],
            |mut c, r| {
                let r = r?;
                c[r.left_bit.index()][r.right_bit.index()] += 1;
                Ok::<_, Error>(c)
            },
        )
        .try_reduce(
            || [[0u64; 2]; 2],
            |mut x, y| {
                for a in 0..2 {
                    for b in 0..2 {
                        x[a][b] += y[a][b];
                    }
                }
                Ok(x)
            },
        )
}

/// Every deterministic instruction set over the given setting lists.
///
/// Strategy `k` assigns left setting `i` the bit `(k / 2^|right|) >> i & 1`
/// and right setting `j` the bit `(k mod 2^|right|) >> j & 1`.
pub fn enumerate_local_strategies(left: &[Angle], right: &[Angle]) -> Result<Vec<LocalStrategy>> {
    if left.is_empty() || right.is_empty() {
        return Err(Error::InvalidParameter("setting lists must be non-empty".into()));
    }
    if left.len() > MAX_ENUMERATED_SETTINGS || right.len() > MAX_ENUMERATED_SETTINGS {
        return Err(Error::EnumerationTooLarge {
            left: left.len(),
            right: right.len(),
            max: MAX_ENUMERATED_SETTINGS,
        });
    }
    let assign = |settings: &[Angle], mask: u32| -> Vec<(Angle, ChannelBit)> {
        settings
            .iter()
            .enumerate()
            .map(|(i, &a)| (a, ChannelBit::from_bool(mask >> i & 1 == 1)))
            .collect()
    };
    let mut out = Vec::with_capacity(1 << (left.len() + right.len()));
    for lm in 0..(1u32 << left.len()) {
        for rm in 0..(1u32 << right.len()) {
            out.push(LocalStrategy::new(assign(left, lm), assign(right, rm)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::JointDistribution;

    #[test]
    fn zigzag_perfect_correlation_at_equal_settings() {
        let s = Settings::deg(0.0, 0.0);
        for i in 0..5000 {
            let r = sample_trial(&ModelKind::SingleTauZigzag, s, i, Seed(42)).unwrap();
            assert_eq!(r.left_bit, r.right_bit);
        }
    }

    #[test]
    fn forced_one_photon_is_deterministic() {
        let m = ModelKind::one_photon(1.0).unwrap();
        for i in 0..1000 {
            let r = sample_trial(&m, Settings::deg(0.0, 0.0), i, Seed(5)).unwrap();
            assert_eq!(r.left_bit, ChannelBit::Aligned);
            assert_eq!(r.tau_a, Some(Angle::deg(0.0)));
            assert_eq!(r.right_bit, ChannelBit::Aligned);
            assert_eq!(r.experiment, Experiment::OnePhoton);
        }
    }

    #[test]
    fn tau_fields_follow_model_invariants() {
        let s = Settings::deg(17.0, 71.0);
        for i in 0..2000 {
            let z = sample_trial(&ModelKind::SingleTauZigzag, s, i, Seed(1)).unwrap();
            assert_eq!(z.tau_a, Some(channel_polarization(s.alpha, z.left_bit)));
            assert!(z.tau_b.is_none());
            let t = sample_trial(&ModelKind::TwoTauSymmetric, s, i, Seed(1)).unwrap();
            assert_eq!(t.tau_a, Some(channel_polarization(s.alpha, t.left_bit)));
            assert_eq!(t.tau_b, Some(channel_polarization(s.beta, t.right_bit)));
        }
    }

    #[test]
    fn zigzag_and_unbiased_one_photon_share_outcomes() {
        let s = Settings::deg(10.0, 40.0);
        let one = ModelKind::OnePhoton { policy: ErutanPolicy::UNBIASED };
        for i in 0..2000 {
            let z = sample_trial(&ModelKind::SingleTauZigzag, s, i, Seed(9)).unwrap();
            let o = sample_trial(&one, s, i, Seed(9)).unwrap();
            assert_eq!((z.left_bit, z.right_bit, z.tau_a), (o.left_bit, o.right_bit, o.tau_a));
        }
    }

    #[test]
    fn empty_batch() {
        assert!(run_batch(&ModelKind::SingleTauZigzag, Settings::deg(0.0, 0.0), 0, Seed(1)).unwrap().is_empty());
    }

    #[test]
    fn batch_is_deterministic() {
        let s = Settings::deg(3.0, 50.0);
        let a = run_batch(&ModelKind::TwoTauSymmetric, s, 500, Seed(77)).unwrap();
        let b = run_batch(&ModelKind::TwoTauSymmetric, s, 500, Seed(77)).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().enumerate().all(|(i, r)| r.trial_index == i as u64));
    }

    #[test]
    fn counts_agree_with_records() {
        let s = Settings::deg(0.0, 30.0);
        let recs = run_batch(&ModelKind::SingleTauZigzag, s, 3000, Seed(4)).unwrap();
        let mut c = [[0u64; 2]; 2];
        for r in &recs {
            c[r.left_bit.index()][r.right_bit.index()] += 1;
        }
        assert_eq!(count_batch(&ModelKind::SingleTauZigzag, s, 3000, Seed(4)).unwrap(), c);
    }

    #[test]
    fn local_strategy_domain_error() {
        let strat = LocalStrategy::new(
            vec![(Angle::deg(0.0), ChannelBit::Aligned)],
            vec![(Angle::deg(0.0), ChannelBit::Aligned)],
        );
        let m = ModelKind::LocalDeterministic { strategy: strat };
        let r = sample_trial(&m, Settings::deg(0.0, 0.0), 0, Seed(0)).unwrap();
        assert_eq!((r.left_bit, r.right_bit, r.tau_a), (ChannelBit::Aligned, ChannelBit::Aligned, None));
        assert!(matches!(
            sample_trial(&m, Settings::deg(0.0, 30.0), 0, Seed(0)),
            Err(Error::StrategyDomain { .. })
        ));
        assert!(matches!(run_batch(&m, Settings::deg(30.0, 0.0), 10, Seed(0)), Err(Error::StrategyDomain { .. })));
    }

    #[test]
    fn enumeration_counts() {
        let a = |v: &[f64]| v.iter().map(|&x| Angle::deg(x)).collect::<Vec<_>>();
        assert_eq!(enumerate_local_strategies(&a(&[0.0, 45.0]), &a(&[22.5, 67.5])).unwrap().len(), 16);
        assert_eq!(enumerate_local_strategies(&a(&[0.0]), &a(&[0.0])).unwrap().len(), 4);
        assert_eq!(enumerate_local_strategies(&a(&[0.0, 10.0, 20.0]), &a(&[0.0, 5.0])).unwrap().len(), 32);
        let nine = a(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        assert!(matches!(
            enumerate_local_strategies(&nine, &a(&[0.0])),
            Err(Error::EnumerationTooLarge { left: 9, .. })
        ));
        assert!(enumerate_local_strategies(&[], &a(&[0.0])).is_err());
    }

    #[test]
    fn enumeration_is_exhaustive_and_unique() {
        let a = |v: &[f64]| v.iter().map(|&x| Angle::deg(x)).collect::<Vec<_>>();
        let all = enumerate_local_strategies(&a(&[0.0, 30.0, 60.0]), &a(&[15.0, 45.0])).unwrap();
        let mut seen = std::collections::HashSet::new();
        for s in &all {
            let key: Vec<u8> = s.left.iter().chain(&s.right).map(|&(_, b)| b as u8).collect();
            assert!(seen.insert(key));
        }
        assert_eq!(seen.len(), 32);
    }

    #[test]
    fn sample_cell_respects_zero_cells() {
        let p = [[0.5, 0.0], [0.0, 0.5]];
        for k in 0..100 {
            let (a, b) = sample_cell(&p, k as f64 / 100.0);
            assert_eq!(a, b);
        }
        assert_eq!(sample_cell(&p, 1.0 - f64::EPSILON / 2.0), (ChannelBit::Aligned, ChannelBit::Aligned));
    }

    #[test]
    fn two_tau_joint_close_to_oracle() {
        let s = Settings::deg(0.0, 30.0);
        let n = 200_000;
        let j = JointDistribution::from_counts(count_batch(&ModelKind::TwoTauSymmetric, s, n, Seed(2)).unwrap()).unwrap();
        assert!(j.total_variation(&two_photon_joint(s)) < 0.01);
    }
}
