use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid angle: {0} is not a finite number of degrees")]
    InvalidAngle(f64),

    #[error("invalid bias {0}: must lie in [0, 1]")]
    InvalidBias(f64),

    #[error("local strategy has no instruction for {side} setting {angle}°")]
    StrategyDomain { side: &'static str, angle: f64 },

    #[error("cannot enumerate strategies over {left} x {right} settings (at most {max} per side)")]
    EnumerationTooLarge { left: usize, right: usize, max: usize },

    #[error("empty batch")]
    EmptyBatch,

    #[error("mixed batch: {0}")]
    MixedBatch(String),

    #[error("inconsistent evidence: {0}")]
    InconsistentEvidence(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
