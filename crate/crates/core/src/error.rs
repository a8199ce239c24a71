use thiserror::Error;

/// Errors reported by weight validation, resampling and tuning.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Weight vector empty, containing negatives/non-finite values, or all zero.
    #[error("invalid weights: {0}")]
    InvalidWeights(&'static str),

    /// Offspring counts do not sum to the particle count.
    #[error("offspring counts sum to {got}, expected {expected}")]
    OffspringSum { got: usize, expected: usize },

    /// Ancestor index outside `[0, P)`.
    #[error("ancestor index {index} out of range for {particles} particles")]
    AncestorOutOfRange { index: usize, particles: usize },

    /// Two vectors that must describe the same particle set differ in length.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// Cumulative search position outside `[0, total]`.
    #[error("search position {position} outside [0, {total}]")]
    PositionOutOfRange { position: f64, total: f64 },

    /// Invalid resampler configuration.
    #[error("invalid resampler configuration: {0}")]
    InvalidConfig(&'static str),

    /// Parameter outside its documented domain.
    #[error("domain error: {0}")]
    Domain(&'static str),

    /// The two-state chain has no randomness to analyse.
    #[error("degenerate chain: alpha + beta = 0")]
    DegenerateChain,

    /// A Metropolis schedule does not match the weight set it is checked against.
    #[error("schedule w_max {scheduled} below observed w_max {observed}")]
    ScheduleMismatch { scheduled: f64, observed: f64 },
}
