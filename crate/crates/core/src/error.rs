//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by channel, gate, oracle, and sweep operations.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter failed validation (negative rate, NaN, empty grid, ...).
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// A target phase-space distance is not reachable for the given amplitude.
    #[error("unrealizable distance {distance} for alpha = {alpha} ({detection})")]
    Unrealizable {
        distance: f64,
        alpha: f64,
        detection: &'static str,
    },

    /// A Fock-space computation was asked to exceed its truncation level.
    #[error("Fock index {n} beyond truncation limit {limit}")]
    FockLimit { n: usize, limit: usize },

    /// Photon-number accounting left too much probability beyond `n_max`.
    #[error("insufficient photon-number truncation: tail mass {tail:.3e}")]
    Truncation { tail: f64 },

    /// The homodyne grid cannot resolve the integrand at the requested tolerance.
    #[error("homodyne grid too coarse: {0}")]
    GridTooCoarse(String),

    /// An evolved Fock operator stopped looking like a scalar multiple of a
    /// coherent dyad.
    #[error("coherent-dyad structure violated: residual {residual:.3e}")]
    StructureResidual { residual: f64 },

    /// A matrix failed the density-matrix invariants.
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
}

pub type Result<T> = std::result::Result<T, Error>;
