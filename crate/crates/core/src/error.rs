use thiserror::Error;

/// Failure modes of the modal machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("system has no modes")]
    EmptySystem,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("duplicate eigenvalue at indices {0} and {1}; spectrum must be simple")]
    DuplicateEigenvalue(usize, usize),
    #[error("non-finite coefficient in mode {0}")]
    NonFinite(usize),
    #[error("mode {0} is not stable (Re lambda >= 0)")]
    UnstableMode(usize),
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("evaluation point hits pole of mode {0}")]
    PoleHit(usize),
    #[error("|1 - H(z)| = {0:e} below threshold; z is an eigenvalue of the closed loop")]
    SingularFeedbackDenominator(f64),
    #[error("mode {0} lies on the unit circle after sampling")]
    PoleOnCircle(usize),
    #[error("no modes outside the bad region; stable tail is empty")]
    EmptyStableTail,
    #[error("unstable mode {0} has zero input coupling")]
    Uncontrollable(usize),
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("pole placement system is singular: {0}")]
    SingularDesign(String),
    #[error("orbit grows faster than r^k (radius estimate {radius}, r = {r})")]
    SeriesDivergence { radius: f64, r: f64 },
    #[error("insufficient data: {got} points in window, need {need}")]
    InsufficientData { got: usize, need: usize },
    #[error("trajectory norms are identically zero in the fit window")]
    ZeroNorms,
    #[error("coupling law diverges: {0}")]
    DivergentCoupling(String),
}

pub type Result<T> = std::result::Result<T, Error>;
