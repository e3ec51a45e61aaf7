use thiserror::Error;

/// Argument outside the domain of a closed-form formula.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DomainError {
    #[error("radius must be positive and finite, got {0:e} cm")]
    NonPositiveRadius(f64),
    #[error("angular frequency must be positive and finite, got {0:e} rad/s")]
    NonPositiveFrequency(f64),
    #[error("window fraction must lie in [0, 1), got {0}")]
    WindowFraction(f64),
    #[error("mode index must be at least 1, got {0}")]
    ModeIndex(u64),
}

/// Failure while evaluating the equation of motion.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DynamicsError {
    #[error("electron reached the Coulomb singularity (|z| = {radius:e} cm < {floor:e} cm)")]
    Singularity { radius: f64, floor: f64 },
    #[error("non-finite derivative at t = {t:e} s")]
    NonFinite { t: f64 },
}

/// Invalid configuration value; `key` is the dotted config path.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid value for `{key}`: {reason}")]
pub struct ConfigError {
    pub key: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HistogramError {
    #[error("histogram has no accumulated time")]
    Empty,
    #[error("histogram binning mismatch: ({0:e}, {1}) vs ({2:e}, {3})")]
    BinningMismatch(f64, usize, f64, usize),
    #[error("invalid binning: bin width {bin_width:e} cm, r_max {r_max:e} cm")]
    InvalidBinning { bin_width: f64, r_max: f64 },
}
