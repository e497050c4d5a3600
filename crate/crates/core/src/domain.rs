//! Value types shared by every module.
//!
//! Angles are kept in degrees. Storage is modulo 360, while two polarizer
//! settings (or two photon polarizations) are physically the same when they
//! differ by a multiple of 180°.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance, in degrees, for every angle comparison.
pub const ANGLE_TOLERANCE: f64 = 1e-9;

/// Tolerance on the total mass of a probability table.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-12;

/// A setting or polarization angle in degrees, normalized into `[0, 360)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Angle(f64);

/// Reduces `degrees` into `[0, 360)`.
pub fn normalize_angle(degrees: f64) -> Result<Angle> {
    if !degrees.is_finite() {
        return Err(Error::InvalidAngle(degrees));
    }
    let mut r = degrees.rem_euclid(360.0);
    // rem_euclid rounds tiny negative inputs up to exactly 360.
    if r >= 360.0 {
        r = 0.0;
    }
    Ok(Angle(r))
}

/// True when `a` and `b` describe the same polarization axis.
pub fn polarization_equivalent(a: Angle, b: Angle) -> bool {
    let d = (a.0 - b.0).rem_euclid(180.0);
    d <= ANGLE_TOLERANCE || 180.0 - d <= ANGLE_TOLERANCE
}

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    pub fn new(degrees: f64) -> Result<Self> {
        normalize_angle(degrees)
    }

    /// Infallible constructor for literal angles.
    ///
    /// Panics if `degrees` is not finite.
    pub fn deg(degrees: f64) -> Self {
        normalize_angle(degrees).expect("angle literal must be finite")
    }

    pub fn degrees(self) -> f64 {
        self.0
    }

    pub fn radians(self) -> f64 {
        self.0.to_radians()
    }

    pub fn rotate(self, degrees: f64) -> Self {
        Angle::deg(self.0 + degrees)
    }

    pub fn perpendicular(self) -> Self {
        self.rotate(90.0)
    }

    /// Signed difference `self - other` in degrees, unreduced.
    pub fn minus(self, other: Angle) -> f64 {
        self.0 - other.0
    }

    pub fn polarization_equivalent(self, other: Angle) -> bool {
        polarization_equivalent(self, other)
    }

    /// Equality of the stored representatives (mod 360) within tolerance.
    pub fn approx_eq(self, other: Angle) -> bool {
        let d = (self.0 - other.0).rem_euclid(360.0);
        d <= ANGLE_TOLERANCE || 360.0 - d <= ANGLE_TOLERANCE
    }

    /// Representative of the polarization axis in `[0, 180)`.
    pub fn axis(self) -> f64 {
        let r = self.0.rem_euclid(180.0);
        if 180.0 - r <= ANGLE_TOLERANCE {
            0.0
        } else {
            r
        }
    }
}

impl TryFrom<f64> for Angle {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        normalize_angle(value)
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}°", self.0)
    }
}

/// Output (or input) channel of a polarizing cube.
///
/// `Aligned` (1) is the channel whose polarization matches the local cube
/// setting; `Perpendicular` (0) is the other one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum ChannelBit {
    Perpendicular = 0,
    Aligned = 1,
}

impl ChannelBit {
    pub fn from_bool(aligned: bool) -> Self {
        if aligned {
            ChannelBit::Aligned
        } else {
            ChannelBit::Perpendicular
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_aligned(self) -> bool {
        self == ChannelBit::Aligned
    }

    pub fn flip(self) -> Self {
        Self::from_bool(!self.is_aligned())
    }
}

impl TryFrom<u8> for ChannelBit {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            0 => Ok(ChannelBit::Perpendicular),
            1 => Ok(ChannelBit::Aligned),
            other => Err(Error::InvalidParameter(format!("channel bit must be 0 or 1, got {other}"))),
        }
    }
}

impl From<ChannelBit> for u8 {
    fn from(b: ChannelBit) -> u8 {
        b as u8
    }
}

impl fmt::Display for ChannelBit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", *self as u8)
    }
}

/// Left (Alice / Ecila) and right (Bob) cube settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub alpha: Angle,
    pub beta: Angle,
}

impl Settings {
    pub fn new(alpha: Angle, beta: Angle) -> Self {
        Self { alpha, beta }
    }

    pub fn deg(alpha: f64, beta: f64) -> Self {
        Self::new(Angle::deg(alpha), Angle::deg(beta))
    }

    /// `alpha - beta` in degrees.
    pub fn relative(&self) -> f64 {
        self.alpha.minus(self.beta)
    }

    pub fn rotate(&self, degrees: f64) -> Self {
        Self::new(self.alpha.rotate(degrees), self.beta.rotate(degrees))
    }

    pub fn approx_eq(&self, other: &Settings) -> bool {
        self.alpha.approx_eq(other.alpha) && self.beta.approx_eq(other.beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Source in the middle, photons sent to Alice and Bob.
    TwoPhoton,
    /// A single photon from Ecila's cube (fed by the hidden randomizer) to Bob.
    OnePhoton,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelId {
    LocalDeterministic,
    Zigzag,
    TwoTau,
    OnePhoton,
}

impl ModelId {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::LocalDeterministic => "local-deterministic",
            ModelId::Zigzag => "zigzag",
            ModelId::TwoTau => "two-tau",
            ModelId::OnePhoton => "one-photon",
        }
    }
}

/// One run of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub experiment: Experiment,
    pub model: ModelId,
    pub trial_index: u64,
    pub alpha: Angle,
    pub beta: Angle,
    /// `A` in the two-photon experiment, `A'` (the input channel) in the one-photon one.
    pub left_bit: ChannelBit,
    pub right_bit: ChannelBit,
    pub tau_a: Option<Angle>,
    pub tau_b: Option<Angle>,
}

impl TrialRecord {
    pub fn settings(&self) -> Settings {
        Settings::new(self.alpha, self.beta)
    }

    pub fn same(&self) -> bool {
        self.left_bit == self.right_bit
    }
}

/// Integer cell counts indexed `[left][right]`.
pub type Counts = [[u64; 2]; 2];

/// A 2x2 probability table over `(left bit, right bit)` for fixed settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    pub p: [[f64; 2]; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Counts>,
}

impl JointDistribution {
    pub fn from_probabilities(p: [[f64; 2]; 2]) -> Result<Self> {
        let mut sum = 0.0;
        for &v in p.iter().flatten() {
            if v.is_nan() || v < 0.0 {
                return Err(Error::InvalidParameter(format!("negative or NaN probability {v}")));
            }
            sum += v;
        }
        if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
            return Err(Error::InvalidParameter(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Self { p, counts: None })
    }

    pub fn from_counts(counts: Counts) -> Result<Self> {
        let n: u64 = counts.iter().flatten().sum();
        if n == 0 {
            return Err(Error::EmptyBatch);
        }
        let nf = n as f64;
        let p = counts.map(|row| row.map(|c| c as f64 / nf));
        Ok(Self { p, counts: Some(counts) })
    }

    pub fn cell(&self, left: ChannelBit, right: ChannelBit) -> f64 {
        self.p[left.index()][right.index()]
    }

    pub fn total(&self) -> f64 {
        self.p.iter().flatten().sum()
    }

    pub fn trials(&self) -> Option<u64> {
        self.counts.map(|c| c.iter().flatten().sum())
    }

    /// P(left bit = 1).
    pub fn left_aligned(&self) -> f64 {
        self.p[1][0] + self.p[1][1]
    }

    /// P(right bit = 1).
    pub fn right_aligned(&self) -> f64 {
        self.p[0][1] + self.p[1][1]
    }

    pub fn p_same(&self) -> f64 {
        self.p[0][0] + self.p[1][1]
    }

    pub fn p_different(&self) -> f64 {
        self.p[0][1] + self.p[1][0]
    }

    /// Correlator `P(same) - P(different)`.
    pub fn correlation(&self) -> f64 {
        self.p_same() - self.p_different()
    }

    /// Total variation distance: half the summed absolute cell differences.
    pub fn total_variation(&self, other: &JointDistribution) -> f64 {
        let mut acc = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                acc += (self.p[a][b] - other.p[a][b]).abs();
            }
        }
        0.5 * acc
    }

    /// Swaps the roles of the two wings.
    pub fn transposed(&self) -> Self {
        let p = [[self.p[0][0], self.p[1][0]], [self.p[0][1], self.p[1][1]]];
        let counts = self
            .counts
            .map(|c| [[c[0][0], c[1][0]], [c[0][1], c[1][1]]]);
        Self { p, counts }
    }
}

/// Bias of the hidden randomizer: probability that the input channel is 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ErutanPolicy {
    bias_p: f64,
}

impl ErutanPolicy {
    /// The unbiased randomizer that mirrors Nature's choice of outputs.
    pub const UNBIASED: ErutanPolicy = ErutanPolicy { bias_p: 0.5 };

    pub fn new(bias_p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&bias_p) {
            return Err(Error::InvalidBias(bias_p));
        }
        Ok(Self { bias_p })
    }

    pub fn bias_p(self) -> f64 {
        self.bias_p
    }

    pub fn is_unbiased(self) -> bool {
        self.bias_p == 0.5
    }

    pub fn prob(self, bit: ChannelBit) -> f64 {
        match bit {
            ChannelBit::Aligned => self.bias_p,
            ChannelBit::Perpendicular => 1.0 - self.bias_p,
        }
    }
}

impl TryFrom<f64> for ErutanPolicy {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        ErutanPolicy::new(v)
    }
}

impl From<ErutanPolicy> for f64 {
    fn from(p: ErutanPolicy) -> f64 {
        p.bias_p
    }
}

/// A local instruction set: a fixed output bit for every allowed setting on
/// each side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalStrategy {
    pub left: Vec<(Angle, ChannelBit)>,
    pub right: Vec<(Angle, ChannelBit)>,
}

impl LocalStrategy {
    pub fn new(left: Vec<(Angle, ChannelBit)>, right: Vec<(Angle, ChannelBit)>) -> Self {
        Self { left, right }
    }

    fn lookup(table: &[(Angle, ChannelBit)], side: &'static str, setting: Angle) -> Result<ChannelBit> {
        table
            .iter()
            .find(|(a, _)| a.polarization_equivalent(setting))
            .map(|&(_, b)| b)
            .ok_or(Error::StrategyDomain { side, angle: setting.degrees() })
    }

    pub fn left_bit(&self, alpha: Angle) -> Result<ChannelBit> {
        Self::lookup(&self.left, "left", alpha)
    }

    pub fn right_bit(&self, beta: Angle) -> Result<ChannelBit> {
        Self::lookup(&self.right, "right", beta)
    }

    pub fn covers(&self, s: &Settings) -> Result<()> {
        self.left_bit(s.alpha)?;
        self.right_bit(s.beta)?;
        Ok(())
    }
}

/// What an observer knows about the four experiment variables.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeState {
    pub known_alpha: Option<Angle>,
    pub known_left_bit: Option<ChannelBit>,
    pub known_beta: Option<Angle>,
    pub known_right_bit: Option<ChannelBit>,
}

impl KnowledgeState {
    pub fn nothing() -> Self {
        Self::default()
    }

    pub fn left_wing(alpha: Angle, bit: ChannelBit) -> Self {
        Self { known_alpha: Some(alpha), known_left_bit: Some(bit), ..Self::default() }
    }

    pub fn right_wing(beta: Angle, bit: ChannelBit) -> Self {
        Self { known_beta: Some(beta), known_right_bit: Some(bit), ..Self::default() }
    }
}
