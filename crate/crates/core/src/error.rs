use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("mode index {index} out of range for {n_modes} mode(s)")]
    ModeIndex { index: usize, n_modes: usize },

    #[error("channel acts on {expected} mode(s) but {got} were given")]
    ArityMismatch { expected: usize, got: usize },

    #[error("mode {0} listed more than once")]
    DuplicateMode(usize),

    #[error("non-physical state: {0}")]
    NonPhysicalState(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("distribution not normalized: total probability {total}")]
    NotNormalized { total: f64 },

    #[error("infeasible configuration: {0}")]
    InfeasibleConfig(String),

    #[error("degenerate estimator: {0}")]
    DegenerateEstimator(&'static str),

    #[error("transfer function vanishes, absorption is not observable")]
    DegenerateTransfer,

    #[error("asymptotic formula outside its domain: N - e^(2r)/4 = {denominator}")]
    RegimePole { denominator: f64 },

    #[error("empty feasible bracket [{lo}, {hi}]")]
    EmptyBracket { lo: f64, hi: f64 },

    #[error("cutoff {cutoff} too small: tail population {tail:e} exceeds budget {budget:e}")]
    CutoffTooSmall {
        cutoff: usize,
        tail: f64,
        budget: f64,
    },

    #[error("{samples} samples given, at least {min} are needed")]
    TooFewSamples { samples: u64, min: u64 },

    #[error("invalid sweep grid: {0}")]
    InvalidGrid(String),

    #[error("sweep point {value}: {source}")]
    SweepPoint { value: f64, source: Box<Error> },
}

pub(crate) fn check_unit_interval(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 && value <= 1.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must lie in (0, 1]",
        })
    }
}

pub(crate) fn check_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        })
    }
}
