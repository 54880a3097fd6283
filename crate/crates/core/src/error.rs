use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid space document: {0}")]
    Schema(String),

    #[error("distance matrix is not symmetric at ({row}, {col}): {forward} vs {backward}")]
    Asymmetric {
        row: usize,
        col: usize,
        forward: f64,
        backward: f64,
    },

    #[error("point {point} has nonpositive weight {weight}")]
    NonpositiveWeight { point: usize, weight: f64 },

    #[error("distinct points {a} and {b} are at distance {dist}")]
    ZeroDistance { a: usize, b: usize, dist: f64 },

    #[error("invalid distance {value} at ({row}, {col})")]
    InvalidDistance { row: usize, col: usize, value: f64 },

    #[error("dyadic base delta = {0} is outside (0, 1)")]
    DeltaOutOfRange(f64),

    #[error("seed net is not separated at scale {scale}: points {a} and {b} at distance {dist}")]
    SeedNotSeparated {
        scale: f64,
        a: usize,
        b: usize,
        dist: f64,
    },

    #[error("construction bug: {0}")]
    Construction(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("gamma constraint violated in factor {factor}: gamma = {gamma} must exceed {bound} ({constraint})")]
    GammaConstraint {
        factor: usize,
        gamma: f64,
        bound: f64,
        constraint: String,
    },

    #[error(
        "function is not doubly mean-zero: scaling channel norms (scaling x wavelet {sw:.3e}, wavelet x scaling {ws:.3e}, scaling x scaling {ss:.3e})"
    )]
    MixedChannels { sw: f64, ws: f64, ss: f64 },

    #[error("open set has zero measure")]
    EmptyOpenSet,

    #[error("rectangle is not a member of the requested family")]
    NotInFamily,

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("malformed export: {0}")]
    Import(String),
}

pub type Result<T> = std::result::Result<T, Error>;
