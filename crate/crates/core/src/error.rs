use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid horizon {0}: need T >= 2")]
    InvalidHorizon(f64),

    #[error("invalid arm count {0}: need k >= 2")]
    InvalidArmCount(usize),

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("infeasible hyperparameters: {0}")]
    Infeasible(String),

    #[error("confidence radius needs at least one sample (tau = 0)")]
    NoSamples,

    #[error("reward {0} outside [0, 1]")]
    InvalidReward(f64),

    #[error("arm index {arm} out of range for {k} arms")]
    InvalidArm { arm: usize, k: usize },

    #[error("cannot summarize an empty trace")]
    EmptyTrace,

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("malformed trace: {0}")]
    Trace(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by inputs that break a mathematical constraint, as opposed
    /// to I/O or parse failures. The CLI maps these to exit code 2.
    pub fn is_constraint(&self) -> bool {
        matches!(
            self,
            Error::InvalidHorizon(_)
                | Error::InvalidArmCount(_)
                | Error::Constraint(_)
                | Error::Infeasible(_)
                | Error::InvalidReward(_)
                | Error::InvalidArm { .. }
        )
    }
}
