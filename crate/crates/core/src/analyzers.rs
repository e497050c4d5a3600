//! Estimators and tests over trial batches: joint tables, CHSH, the
//! no-signalling homogeneity test, Bob's bias scan and the bit decoder.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::domain::{Angle, ChannelBit, ErutanPolicy, Experiment, JointDistribution, LocalStrategy, Settings, TrialRecord};
use crate::error::{Error, Result};
use crate::models::{count_batch, enumerate_local_strategies, sample_trial, ModelKind};
use crate::oracle::correlation_e;
use crate::rng::Seed;

/// Joint table of a homogeneous batch.
pub fn estimate_joint(trials: &[TrialRecord]) -> Result<JointDistribution> {
    let first = trials.first().ok_or(Error::EmptyBatch)?;
    let settings = first.settings();
    let mut counts = [[0u64; 2]; 2];
    for t in trials {
        if t.experiment != first.experiment {
            return Err(Error::MixedBatch(format!(
                "trial {} is {:?}, batch started as {:?}",
                t.trial_index, t.experiment, first.experiment
            )));
        }
        if !t.settings().approx_eq(&settings) {
            return Err(Error::MixedBatch(format!(
                "trial {} has settings ({}, {}), batch started with ({}, {})",
                t.trial_index, t.alpha, t.beta, settings.alpha, settings.beta
            )));
        }
        counts[t.left_bit.index()][t.right_bit.index()] += 1;
    }
    JointDistribution::from_counts(counts)
}

/// Left settings `a1, a2` and right settings `b1, b2` of a CHSH experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChshConfig {
    pub a1: Angle,
    pub a2: Angle,
    pub b1: Angle,
    pub b2: Angle,
}

impl ChshConfig {
    pub fn new(a1: Angle, a2: Angle, b1: Angle, b2: Angle) -> Self {
        Self { a1, a2, b1, b2 }
    }

    /// `(0°, 45°; 22.5°, 67.5°)`, where the quantum value reaches 2√2.
    pub fn standard() -> Self {
        Self::new(Angle::deg(0.0), Angle::deg(45.0), Angle::deg(22.5), Angle::deg(67.5))
    }

    /// Setting pairs in the order `(a1,b1), (a1,b2), (a2,b1), (a2,b2)`.
    pub fn pairs(&self) -> [Settings; 4] {
        [
            Settings::new(self.a1, self.b1),
            Settings::new(self.a1, self.b2),
            Settings::new(self.a2, self.b1),
            Settings::new(self.a2, self.b2),
        ]
    }

    pub fn left(&self) -> [Angle; 2] {
        [self.a1, self.a2]
    }

    pub fn right(&self) -> [Angle; 2] {
        [self.b1, self.b2]
    }
}

const CHSH_SIGNS: [f64; 4] = [1.0, -1.0, 1.0, 1.0];

fn chsh_combine(e: [f64; 4]) -> f64 {
    e.iter().zip(CHSH_SIGNS).map(|(e, s)| e * s).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChshEstimate {
    pub s: f64,
    pub std_error: f64,
    /// Estimated correlators in [`ChshConfig::pairs`] order.
    pub correlations: [f64; 4],
    pub trials_per_pair: u64,
}

/// Sampled CHSH statistic: four independent batches of `n_per_pair` trials.
/// Batch `k` runs under `seed.derive(k)`.
pub fn chsh(model: &ModelKind, cfg: &ChshConfig, n_per_pair: u64, seed: Seed) -> Result<ChshEstimate> {
    if n_per_pair == 0 {
        return Err(Error::InvalidParameter("trials per pair must be at least 1".into()));
    }
    let mut correlations = [0.0; 4];
    let mut var = 0.0;
    for (k, s) in cfg.pairs().into_iter().enumerate() {
        let counts = count_batch(model, s, n_per_pair, seed.derive(k as u64))?;
        let e = JointDistribution::from_counts(counts)?.correlation();
        correlations[k] = e;
        var += (1.0 - e * e) / n_per_pair as f64;
    }
    Ok(ChshEstimate { s: chsh_combine(correlations), std_error: var.sqrt(), correlations, trials_per_pair: n_per_pair })
}

/// CHSH value of the closed-form quantum correlator.
pub fn chsh_analytic(cfg: &ChshConfig) -> f64 {
    chsh_combine(cfg.pairs().map(correlation_e))
}

/// Exact CHSH value of one local instruction set.
pub fn chsh_deterministic(strategy: &LocalStrategy, cfg: &ChshConfig) -> Result<f64> {
    let mut e = [0.0; 4];
    for (k, s) in cfg.pairs().into_iter().enumerate() {
        e[k] = if strategy.left_bit(s.alpha)? == strategy.right_bit(s.beta)? { 1.0 } else { -1.0 };
    }
    Ok(chsh_combine(e))
}

/// Largest |S| over every local deterministic strategy on the CHSH settings.
pub fn max_local_chsh(cfg: &ChshConfig) -> Result<f64> {
    let mut best = 0.0f64;
    for strategy in enumerate_local_strategies(&cfg.left(), &cfg.right())? {
        best = best.max(chsh_deterministic(&strategy, cfg)?.abs());
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SettingMarginal {
    pub alpha: Angle,
    pub trials: u64,
    pub right_aligned: u64,
    pub p_right_aligned: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquaredTest {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoSignallingReport {
    pub beta: Angle,
    pub max_marginal_gap: f64,
    pub per_setting_marginals: Vec<SettingMarginal>,
    pub chi_squared: ChiSquaredTest,
    pub p_value: f64,
}

/// Pearson chi-squared test of homogeneity for a 2 x k table given as
/// `(successes, trials)` per column.
///
/// Cells with zero expected count are skipped; a table with an empty row or
/// fewer than two non-empty columns has statistic 0 and p-value 1.
pub fn chi_squared_homogeneity(columns: &[(u64, u64)]) -> ChiSquaredTest {
    let k = columns.iter().filter(|&&(_, n)| n > 0).count();
    let total: u64 = columns.iter().map(|&(_, n)| n).sum();
    let ones: u64 = columns.iter().map(|&(s, _)| s).sum();
    let zeros = total - ones;
    if k < 2 || ones == 0 || zeros == 0 {
        return ChiSquaredTest { statistic: 0.0, degrees_of_freedom: k.saturating_sub(1), p_value: 1.0 };
    }
    let nf = total as f64;
    let mut stat = 0.0;
    for &(s, n) in columns.iter().filter(|&&(_, n)| n > 0) {
        for (observed, row_total) in [(s, ones), (n - s, zeros)] {
            let expected = row_total as f64 * n as f64 / nf;
            let d = observed as f64 - expected;
            stat += d * d / expected;
        }
    }
    let df = k - 1;
    let dist = ChiSquared::new(df as f64).expect("df >= 1");
    ChiSquaredTest { statistic: stat, degrees_of_freedom: df, p_value: dist.sf(stat).clamp(0.0, 1.0) }
}

/// Checks that Bob's marginal does not depend on the left setting.
/// Setting `i` runs under `seed.derive(i)`.
pub fn no_signalling_test(
    model: &ModelKind,
    left_settings: &[Angle],
    beta: Angle,
    n_per_setting: u64,
    seed: Seed,
) -> Result<NoSignallingReport> {
    if left_settings.len() < 2 {
        return Err(Error::InvalidParameter("need at least two left settings".into()));
    }
    if n_per_setting == 0 {
        return Err(Error::InvalidParameter("trials per setting must be at least 1".into()));
    }
    let mut marginals = Vec::with_capacity(left_settings.len());
    for (i, &alpha) in left_settings.iter().enumerate() {
        let c = count_batch(model, Settings::new(alpha, beta), n_per_setting, seed.derive(i as u64))?;
        let ones = c[0][1] + c[1][1];
        marginals.push(SettingMarginal {
            alpha,
            trials: n_per_setting,
            right_aligned: ones,
            p_right_aligned: ones as f64 / n_per_setting as f64,
        });
    }
    let mut gap = 0.0f64;
    for (i, x) in marginals.iter().enumerate() {
        for y in &marginals[i + 1..] {
            gap = gap.max((x.p_right_aligned - y.p_right_aligned).abs());
        }
    }
    let columns: Vec<(u64, u64)> = marginals.iter().map(|m| (m.right_aligned, m.trials)).collect();
    let chi = chi_squared_homogeneity(&columns);
    Ok(NoSignallingReport { beta, max_marginal_gap: gap, per_setting_marginals: marginals, p_value: chi.p_value, chi_squared: chi })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaBias {
    pub beta: Angle,
    pub trials: u64,
    pub p_right_aligned: f64,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasScan {
    pub best_beta: Angle,
    pub bias_magnitude: f64,
    pub per_beta: Vec<BetaBias>,
}

/// Picks the entry with the largest |bias|; ties go to the smallest angle.
fn pick_best(per_beta: Vec<BetaBias>) -> Result<BiasScan> {
    let best = per_beta
        .iter()
        .min_by(|x, y| {
            y.bias
                .abs()
                .total_cmp(&x.bias.abs())
                .then(x.beta.degrees().total_cmp(&y.beta.degrees()))
        })
        .ok_or(Error::EmptyBatch)?;
    Ok(BiasScan { best_beta: best.beta, bias_magnitude: best.bias.abs(), per_beta: per_beta.clone() })
}

/// Bob's search for the polarizer setting with the most lopsided outputs.
/// Grid point `i` runs under `seed.derive(i)`.
pub fn bias_scan(model: &ModelKind, alpha: Angle, beta_grid: &[Angle], n_per_beta: u64, seed: Seed) -> Result<BiasScan> {
    if beta_grid.is_empty() {
        return Err(Error::InvalidParameter("beta grid is empty".into()));
    }
    if n_per_beta == 0 {
        return Err(Error::InvalidParameter("trials per beta must be at least 1".into()));
    }
    let mut per_beta = Vec::with_capacity(beta_grid.len());
    for (i, &beta) in beta_grid.iter().enumerate() {
        let c = count_batch(model, Settings::new(alpha, beta), n_per_beta, seed.derive(i as u64))?;
        let p = (c[0][1] + c[1][1]) as f64 / n_per_beta as f64;
        per_beta.push(BetaBias { beta, trials: n_per_beta, p_right_aligned: p, bias: p - 0.5 });
    }
    pick_best(per_beta)
}

/// Sender setting for bit `index` of a message: `0 → 0°/90°`, `1 → 45°/135°`,
/// alternating between the two axes of a class as the index advances.
pub fn encode_bit(bit: u8, index: usize) -> Angle {
    Angle::deg(45.0 * f64::from(bit & 1) + 90.0 * (index % 2) as f64)
}

/// Message bit read off a polarization axis: nearest of {0°, 90°} (bit 0)
/// or {45°, 135°} (bit 1), with class boundaries at 22.5° + k·45°.
pub fn decode_class(beta: Angle) -> u8 {
    let d = beta.degrees().rem_euclid(90.0);
    if (22.5..67.5).contains(&d) {
        1
    } else {
        0
    }
}

/// Ecila's photons for one message bit: `photons` one-photon trials at
/// sender setting `alpha`, Bob cycling through `beta_grid` round-robin.
pub fn emit_signal_batch(
    policy: ErutanPolicy,
    alpha: Angle,
    photons: u64,
    beta_grid: &[Angle],
    seed: Seed,
) -> Result<Vec<TrialRecord>> {
    if beta_grid.is_empty() {
        return Err(Error::InvalidParameter("beta grid is empty".into()));
    }
    let model = ModelKind::OnePhoton { policy };
    (0..photons)
        .map(|i| {
            let beta = beta_grid[(i % beta_grid.len() as u64) as usize];
            sample_trial(&model, Settings::new(alpha, beta), i, seed)
        })
        .collect()
}

fn check_grid_coverage(beta_grid: &[Angle]) -> Result<()> {
    const MAX_STEP: f64 = 22.5;
    let mut axes: Vec<f64> = beta_grid.iter().map(|a| a.axis()).collect();
    axes.sort_by(f64::total_cmp);
    axes.dedup_by(|a, b| (*a - *b).abs() <= crate::domain::ANGLE_TOLERANCE);
    let mut widest = match (axes.first(), axes.last()) {
        (Some(lo), Some(hi)) => lo + 180.0 - hi,
        _ => return Err(Error::InvalidParameter("beta grid is empty".into())),
    };
    for w in axes.windows(2) {
        widest = widest.max(w[1] - w[0]);
    }
    if widest > MAX_STEP + crate::domain::ANGLE_TOLERANCE {
        return Err(Error::InvalidParameter(format!(
            "beta grid leaves a {widest}° gap; decoding needs a step of at most {MAX_STEP}° over [0°, 180°)"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecodedMessage {
    pub bits: String,
    pub per_bit_best_beta: Vec<Angle>,
    pub per_bit_bias_magnitude: Vec<f64>,
}

/// Decodes one bit per batch from the setting of maximum bias at Bob's end.
pub fn decode_signal(bit_batches: &[Vec<TrialRecord>], beta_grid: &[Angle]) -> Result<DecodedMessage> {
    check_grid_coverage(beta_grid)?;
    let mut msg = DecodedMessage { bits: String::new(), per_bit_best_beta: Vec::new(), per_bit_bias_magnitude: Vec::new() };
    for batch in bit_batches {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mut tallies = vec![(0u64, 0u64); beta_grid.len()];
        for t in batch {
            if t.experiment != Experiment::OnePhoton {
                return Err(Error::MixedBatch(format!("trial {} is not a one-photon trial", t.trial_index)));
            }
            let slot = beta_grid
                .iter()
                .position(|g| g.approx_eq(t.beta))
                .ok_or_else(|| Error::MixedBatch(format!("trial {} has beta {} outside the grid", t.trial_index, t.beta)))?;
            tallies[slot].1 += 1;
            if t.right_bit == ChannelBit::Aligned {
                tallies[slot].0 += 1;
            }
        }
        let per_beta: Vec<BetaBias> = beta_grid
            .iter()
            .zip(tallies)
            .filter(|(_, (_, n))| *n > 0)
            .map(|(&beta, (ones, n))| {
                let p = ones as f64 / n as f64;
                BetaBias { beta, trials: n, p_right_aligned: p, bias: p - 0.5 }
            })
            .collect();
        let scan = pick_best(per_beta)?;
        msg.bits.push(if decode_class(scan.best_beta) == 1 { '1' } else { '0' });
        msg.per_bit_best_beta.push(scan.best_beta);
        msg.per_bit_bias_magnitude.push(scan.bias_magnitude);
    }
    Ok(msg)
}

/// Evenly spaced grid `0, step, 2·step, ...` below 180°.
pub fn beta_grid(step: f64) -> Result<Vec<Angle>> {
    if !(step.is_finite() && step > 0.0 && step <= 180.0) {
        return Err(Error::InvalidParameter(format!("grid step must lie in (0, 180], got {step}")));
    }
    let mut out = Vec::new();
    let mut k = 0u32;
    loop {
        let d = f64::from(k) * step;
        if d >= 180.0 - crate::domain::ANGLE_TOLERANCE {
            break;
        }
        out.push(Angle::deg(d));
        k += 1;
    }
    Ok(out)
}
