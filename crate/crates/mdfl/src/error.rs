//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A surface with coincident endpoints cannot define a mirror line.
    #[error("degenerate surface `{id}`: endpoints coincide")]
    DegenerateSurface { id: String },

    /// A reflection sequence referenced a surface index outside the environment.
    #[error("unknown surface index {index} (environment has {count} surfaces)")]
    UnknownSurface { index: usize, count: usize },

    /// Virtual node pairs of one sequence disagree on the path length.
    #[error("inconsistent virtual-node pair distances: spread {spread_m} m exceeds tolerance")]
    InconsistentPairDistances { spread_m: f64 },

    /// A component delay does not fit the synthesis window.
    #[error("delay {delay_s} s outside the usable window [0, {max_s}] s")]
    DelayOutOfWindow { delay_s: f64, max_s: f64 },

    /// The reference amplitude of a power ratio is zero.
    #[error("zero reference amplitude: power change undefined")]
    ZeroReferenceAmplitude,

    /// An operation needed at least one associated multipath component.
    #[error("empty measurement union: no associated multipath components")]
    EmptyUnion,

    /// The measurement gradient is undefined at the query point.
    #[error("singular gradient: query point coincides with a virtual node")]
    SingularGradient,

    /// Every sampled point of a region had a singular information matrix.
    #[error("expected RMSE undefined: all {points} sampled points singular")]
    AllPointsSingular { points: usize },

    /// Invalid configuration value.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Scenario file could not be parsed or failed validation.
    #[error("scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn scenario(msg: impl Into<String>) -> Self {
        Error::Scenario(msg.into())
    }
}
