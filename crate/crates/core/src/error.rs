use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },
    #[error("expression leaves the trig/exp polynomial class: {0}")]
    NonCanonicalizable(String),
    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),
    #[error("substitution leaves the trig/exp polynomial class: {0}")]
    ClosureViolation(String),
    #[error("base map is not compatible with periodic coordinates: {0}")]
    PeriodicityViolation(String),
    #[error("not a unit of the function class: {0}")]
    NotAUnit(String),
    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("invalid presentation: {0}")]
    InvalidPresentation(String),
    #[error("representation is not flat: {0}")]
    NotFlat(String),
    #[error("cocycle is not closed: {0}")]
    NotClosed(String),
    #[error("could not expand in frame: {0}")]
    FrameSolveFailure(String),
    #[error("map is not admissible: {0}")]
    AdmissibilityFailure(String),
    #[error("bracket does not close on the kernel image: {0}")]
    ImageClosureFailure(String),
    #[error("kernel is not unimodular: {0}")]
    UnimodularityFailure(String),
    #[error("could not lift base frame: {0}")]
    LiftSolveFailure(String),
    #[error("bivector is not Poisson: [pi, pi] = {0}")]
    NotPoisson(String),
    #[error("precondition failed: {0}")]
    PreconditionFailure(String),
    #[error("composition not declared: {0}")]
    MissingComposition(String),
    #[error("morphism check failed: {0}")]
    NotAMorphism(String),
}
