//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("incompatible states: dimensions {left} and {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("spin-1/2-only observable requested on a {dim}-dimensional state")]
    NotTwoLevel { dim: usize },

    #[error("state dimension must be at least 2 (got {dim})")]
    DimensionTooSmall { dim: usize },

    #[error("cannot normalize a zero vector")]
    ZeroNorm,

    #[error("state norm {norm} deviates from 1 by more than {tolerance}")]
    NormDrift { norm: f64, tolerance: f64 },

    #[error("relative phase undefined: overlap magnitude {magnitude} below threshold")]
    VanishingOverlap { magnitude: f64 },

    #[error("invalid time grid: {reason}")]
    InvalidGrid { reason: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time {t} outside sampled range [{lo}, {hi}]")]
    OutOfSampleRange { t: f64, lo: f64, hi: f64 },

    #[error("generator is not Hermitian (max entrywise |H - H^dag| = {max_deviation:.3e})")]
    NonHermitian { max_deviation: f64 },

    #[error("eigenvalue gap {gap:.3e} below tolerance at node {node} (t = {t})")]
    Degeneracy { node: usize, t: f64, gap: f64 },

    #[error("frame tilt undefined: numerator and denominator both vanish")]
    UndefinedTilt,

    #[error("no closed-form oracle for family `{family}`")]
    NoClosedFormOracle { family: String },

    #[error("trajectory is not cyclic (endpoint overlap magnitude {overlap_magnitude})")]
    NotCyclic { overlap_magnitude: f64 },

    #[error("track under-resolved near node {node}: consecutive overlap magnitude {magnitude:.3e}")]
    UnderResolvedTrack { node: usize, magnitude: f64 },

    #[error("parameter loop not closed: endpoint generators differ by {deviation:.3e}")]
    OpenParameterLoop { deviation: f64 },

    #[error("trajectories live on different grids")]
    GridMismatch,

    #[error("need at least {needed} nodes (got {nodes})")]
    TooFewNodes { nodes: usize, needed: usize },

    #[error("frame continuation breakdown at node {node}: complement overlap {overlap:.3} < 0.5")]
    FrameContinuationBreakdown { node: usize, overlap: f64 },

    #[error("matrix diagonalization failed: {reason}")]
    Diagonalization { reason: String },

    #[error("scenario validation failed: {message}")]
    Scenario { message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
