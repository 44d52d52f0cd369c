use thiserror::Error;

/// Errors raised by the library.
///
/// The two broad families matter to callers: configuration errors (bad
/// parameters handed to a constructor or schedule) and contract
/// violations (an environment or pool that broke its promised invariants
/// while a run was in progress).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FoeError {
    #[error("invalid clock value {0}: time starts at 1")]
    InvalidClock(u64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("prior weights sum to {0}, which exceeds 1")]
    KraftViolation(f64),
    #[error("no active expert at t = {0}")]
    EmptyActiveSet(u64),
    #[error("unknown expert id {0}")]
    UnknownExpert(usize),
    #[error("negative estimated loss {0}")]
    NegativeLoss(f64),
    #[error("loss {loss} at t = {t} outside [0, {bound}]")]
    LossOutOfRange { t: u64, loss: f64, bound: f64 },
    #[error("bandit feedback violated: {0}")]
    BanditViolation(String),
    #[error("environment contract violated: {0}")]
    Contract(String),
}

impl FoeError {
    /// True for errors that arise from a running experiment rather than
    /// from bad inputs.
    pub fn is_contract_violation(&self) -> bool {
        matches!(
            self,
            FoeError::LossOutOfRange { .. }
                | FoeError::BanditViolation(_)
                | FoeError::Contract(_)
                | FoeError::EmptyActiveSet(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, FoeError>;
