//! Hidden-variable simulations of polarization-entanglement experiments.
//!
//! The crate samples the two-photon EPR experiment and its time-reversed
//! one-photon counterpart under several models: local instruction sets, the
//! retrocausal single-τ zigzag, a two-τ symmetric variant, and the one-photon
//! experiment with a configurable input randomizer. Closed-form quantum tables
//! in [`oracle`] are the reference for every estimator in [`analyzers`],
//! [`mirror`] and [`inference`].

pub mod analyzers;
pub mod cli;
pub mod domain;
pub mod error;
pub mod inference;
pub mod mirror;
pub mod models;
pub mod oracle;
pub mod rng;

pub use domain::{
    normalize_angle, polarization_equivalent, Angle, ChannelBit, ErutanPolicy, Experiment, JointDistribution,
    KnowledgeState, LocalStrategy, ModelId, Settings, TrialRecord,
};
pub use error::{Error, Result};
pub use models::ModelKind;
pub use rng::Seed;
