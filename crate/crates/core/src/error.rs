use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid instance configuration: {0}")]
    InvalidSpec(String),

    #[error("character {0} is not resolvable in the instance enumeration")]
    CharacterOutOfRange(String),

    #[error("the empty character (constant 1) is not a member of the determining class")]
    EmptyCharacter,

    #[error("no closed form registered for {0}")]
    NoClosedForm(String),

    #[error("mark law {law} is not supported by the {instance} instance")]
    UnsupportedLaw { law: String, instance: String },

    #[error("invalid Levy measure layer: {0}")]
    InvalidLayer(String),

    #[error("drift is not supported by the {0} instance")]
    DriftUnsupported(String),

    #[error("time {t} is outside the path horizon [0, {horizon}]")]
    OutOfHorizon { t: f64, horizon: f64 },

    #[error("inner clock reaches {needed}, beyond the outer path horizon {horizon}")]
    HorizonExceeded { needed: f64, horizon: f64 },

    #[error("the {0} instance has no scaling action")]
    NoAction(String),

    #[error("degenerate ratio: phi vanishes at sequence position {0}")]
    DegenerateRatio(usize),

    #[error("extrapolation did not stabilise: residual {residual} exceeds tolerance {tolerance}")]
    NonConvergent { residual: f64, tolerance: f64 },

    #[error("degenerate rate: q + Psi(c^{0}) vanishes")]
    DegenerateRate(usize),

    #[error("ensemble is empty")]
    EmptyEnsemble,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
