//! Crate-wide error type.
//!
//! Variants are grouped by how callers should react: input validation
//! problems (bad parameters, mismatched dimensions, malformed files) are
//! recoverable by fixing the call, while the numerical variants (rank
//! deficiency, non-convergence, drifting frames) signal that the data does
//! not support the requested operation at the requested scale.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while projecting, resampling, or measuring.
#[derive(Debug, Error)]
pub enum Error {
    /// An operation needs more samples than the cloud provides.
    #[error("insufficient points: need at least {needed}, have {actual}")]
    InsufficientPoints { needed: usize, actual: usize },

    /// Two samples are closer than the coincidence tolerance.
    #[error("coincident samples: points {i} and {j} are within {tolerance:e}")]
    CoincidentSamples { i: usize, j: usize, tolerance: f64 },

    /// A point or cloud has the wrong dimension for the operation.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// A scalar or structural parameter is outside its valid range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A node index does not exist in the graph or cloud.
    #[error("index {index} out of range for {len} elements")]
    IndexOutOfRange { index: usize, len: usize },

    /// No sample carries positive weight near the evaluation point.
    #[error("empty support: no samples carry positive weight near the query")]
    EmptySupport,

    /// The weighted design matrix cannot determine a unique polynomial.
    #[error("unisolvency failure: {reason}")]
    UnisolvencyFailure { reason: String },

    /// Too few in-support neighbors to determine a local frame.
    #[error("sparse neighborhood: {count} usable neighbors, need at least {needed}")]
    SparseNeighborhood { count: usize, needed: usize },

    /// The weighted second-moment spectrum does not separate a d-dimensional
    /// direction subspace from the rest.
    #[error("ambiguous tangent dimension: spectral gap {gap:e} below threshold {threshold:e}")]
    AmbiguousTangent { gap: f64, threshold: f64 },

    /// The frame-finding iteration did not settle within its iteration cap.
    #[error("step-1 non-convergence after {iterations} iterations (last step {last_step:e})")]
    Step1NonConvergence { iterations: usize, last_step: f64 },

    /// The local origin wandered away from every sample.
    #[error("frame drifted from samples: no sample within h = {h:e} of the local origin")]
    FrameDrift { h: f64 },

    /// The local origin left the region of interest around the query.
    #[error("frame origin left the region of interest: |q - r| = {distance:e} > mu = {mu:e}")]
    RoiViolation { distance: f64, mu: f64 },

    /// The step-1 objective rose by more than its motion-proportional slack.
    #[error(
        "step-1 objective increased at iteration {iteration}: {previous:e} -> {current:e}"
    )]
    ObjectiveIncrease { iteration: usize, previous: f64, current: f64 },

    /// A densification projection failed; indices identify the offender.
    #[error("projection failed for source {source}, grid node {grid}: {cause}")]
    ProjectionFailed {
        source: u32,
        grid: u32,
        #[source]
        cause: Box<Error>,
    },

    /// Shortest-path endpoints lie in different graph components.
    #[error("disconnected densified cloud - increase K or the connection radius")]
    Disconnected,

    /// A supposedly on-sphere point is too far from the embedded sphere.
    #[error("off-sphere input: deviation {deviation:e} exceeds tolerance {tolerance:e}")]
    OffSphere { deviation: f64, tolerance: f64 },

    /// A guaranteed internal property failed; indicates a bug, not bad input.
    #[error("internal invariant violated: {0}")]
    Internal(String),

    /// Underlying file-system failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A text file does not parse as the expected format.
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}
