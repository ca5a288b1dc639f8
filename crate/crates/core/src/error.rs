use thiserror::Error;

/// Structural problems found while validating a model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("cycle detected: {}", .cycle.join(" -> "))]
    CycleDetected { cycle: Vec<String> },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("row {row} of variable {variable} sums to {sum}")]
    RowNotNormalized { variable: String, row: usize, sum: f64 },
    #[error("duplicate variable name {0:?}")]
    DuplicateVariable(String),
    #[error("variable {variable:?} has duplicate state label {state:?}")]
    DuplicateState { variable: String, state: String },
    #[error("variable {0:?} needs at least two states")]
    TooFewStates(String),
    #[error("edge ({0}, {1}) references an unknown variable")]
    UnknownVariable(usize, usize),
    #[error("probability {value} out of [0, 1] in variable {variable}")]
    ProbabilityOutOfRange { variable: String, value: f64 },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("variable {variable} needs a value for parent {parent}")]
    MissingParentValue { variable: usize, parent: usize },
    #[error("assignment does not cover every variable")]
    PartialAssignment,
    #[error("dataset has missing cells; use EM for incomplete data")]
    IncompleteData,
    #[error("evidence has zero probability under the model")]
    ZeroEvidence,
    #[error("target variable {0} is part of the evidence")]
    TargetInEvidence(usize),
    #[error("state space of {size} configurations exceeds the cap {cap}")]
    StateSpaceTooLarge { size: u128, cap: u128 },
    #[error("variable {0} is never observed and has no prior")]
    NoObservedData(String),
    #[error("no record observes both {0} and {1}")]
    NoCompletePairs(String, String),
    #[error("dataset is empty")]
    EmptyData,
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("state index {state} out of range for variable {variable}")]
    StateOutOfRange { variable: usize, state: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse { location: location.into(), message: message.into() }
    }

    /// Whether the failure comes from malformed input rather than from a computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation(_) | Error::Parse { .. } | Error::SchemaMismatch(_) | Error::StateOutOfRange { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
