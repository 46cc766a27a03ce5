use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid size {0} must be a power of two and at least 8")]
    InvalidGridSize(usize),
    #[error("dimension {0} not supported (expected 2 or 3)")]
    InvalidDimension(usize),
    #[error("box length must be positive and finite, got {0}")]
    InvalidLength(f64),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("spectral field is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("dyadic profile violates its support requirement: {0}")]
    ProfileSupport(String),
    #[error("grid too coarse: resolved bands {min}..={max} need at least 4 levels")]
    GridTooCoarse { min: i32, max: i32 },
    #[error("band {band} outside available range {min}..={max}")]
    BandOutOfRange { band: i32, min: i32, max: i32 },
    #[error("ball index {index} out of range (cover has {count} balls)")]
    BallOutOfRange { index: usize, count: usize },
    #[error("ball cover leaves lattice point {0:?} uncovered")]
    CoverGap(Vec<i64>),
    #[error("kernel not decayed at half-box distance: relative tail {tail:e} exceeds {tol:e}")]
    KernelNotDecayed { tail: f64, tol: f64 },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("CFL violated: dt = {dt:e} exceeds admissible {max_dt:e}")]
    Cfl { dt: f64, max_dt: f64 },
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
    #[error("series error: {0}")]
    Series(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
