use thiserror::Error;

/// Errors raised by the assessment engine and its supporting modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("length mismatch: expected {expected} skills, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("prerequisite contradiction at skill `{skill}`: required both mastered and unmastered")]
    Inconsistent { skill: String },

    #[error("no trainable learners")]
    NoTrainableLearners,

    #[error("numeric fault: {0}")]
    Numeric(String),

    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("no unassessed skill left to ask")]
    NoQuestion,

    #[error("answer for skill {actual} out of turn (awaiting {expected:?})")]
    UnexpectedAnswer { expected: Option<usize>, actual: usize },

    #[error("skill {0} is already assessed")]
    AlreadyAssessed(usize),

    #[error("undefined metric: empty scope")]
    EmptyScope,

    #[error("unknown skill `{0}`")]
    UnknownSkill(String),

    #[error("respondent failure: {0}")]
    Respondent(String),

    #[error("correction rejected: {0}")]
    Correction(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    /// Coarse fault class, used by front-ends to map errors onto exit codes.
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parameter { .. } => ErrorClass::Config,
            Error::Numeric(_) | Error::Diverged { .. } | Error::EmptyScope => ErrorClass::Numeric,
            Error::Io(_) | Error::Respondent(_) | Error::UnexpectedAnswer { .. } => ErrorClass::Runtime,
            _ => ErrorClass::Data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numeric,
    Runtime,
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}
