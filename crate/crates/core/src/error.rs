use thiserror::Error;

use crate::geom::Vec2;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {0} lies outside the domain")]
    OutsideDomain(Vec2),

    #[error("invalid branch: {0}")]
    InvalidBranch(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("a function needs at least one branch")]
    NoBranches,

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("non-finite value while evaluating {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point {0} is not singular")]
    NotSingular(Vec2),

    #[error("corrector failed near {at}: step fell below {min_step:e}")]
    CorrectorFailed { at: Vec2, min_step: f64 },

    #[error("arc too short: {0} samples survive truncation, need at least 3")]
    ArcTooShort(usize),

    #[error("slice width along e2 vanishes on the arc (measured {0:e})")]
    DegenerateSlice(f64),

    #[error("no admissible partition index at x = {x}: slice [{lo}, {hi}], mesh {mesh}")]
    Classification { x: f64, lo: f64, hi: f64, mesh: f64 },

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("selection violated at grid index {0}: value matches no candidate")]
    SelectionViolation(usize),

    #[error("selection jumps between grid indices {0} and {1}")]
    SelectionDiscontinuity(usize, usize),

    #[error("repeated consecutive point at index {0}")]
    RepeatedPoint(usize),

    #[error("point {0} is too close to the domain boundary for step {1}")]
    MarginViolation(Vec2, f64),

    #[error("no differentiability point found among {0} samples")]
    SamplingFailed(usize),

    #[error("scenario line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
