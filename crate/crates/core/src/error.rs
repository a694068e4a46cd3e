use thiserror::Error;

use crate::auth::Permission;
use crate::domain::ValidationFinding;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("authentication required")]
    Unauthenticated,
    #[error("permission {0} denied")]
    Forbidden(Permission),
    #[error("invalid credentials")]
    InvalidCredentials,
    #[error("password must be at least {min} characters")]
    WeakPassword { min: usize },
    #[error("{kind} {id} not found")]
    NotFound { kind: &'static str, id: String },
    #[error("unknown patient {0}")]
    UnknownPatient(String),
    #[error("unknown disease {0}")]
    UnknownDisease(String),
    #[error("unknown drug {0}")]
    UnknownDrug(String),
    #[error("{0} already exists")]
    UniqueViolation(String),
    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("{0}")]
    WrongState(String),
    #[error("prescription blocked by {} finding(s)", .0.len())]
    Blocked(Vec<ValidationFinding>),
    #[error("{} warning(s) need an override reason", .0.len())]
    OverridesRequired(Vec<ValidationFinding>),
    #[error("only the prescribing doctor may do this")]
    NotPrescriber,
    #[error("only the acknowledging pharmacist may dispense")]
    NotAcknowledgingPharmacist,
    #[error("an administrator already exists")]
    AlreadyBootstrapped,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Reference(String),
    #[error("storage: {0}")]
    Storage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Unauthenticated => "UNAUTHENTICATED",
            Error::Forbidden(_) => "FORBIDDEN",
            Error::InvalidCredentials => "INVALID_CREDENTIALS",
            Error::WeakPassword { .. } => "WEAK_PASSWORD",
            Error::NotFound { .. } => "NOT_FOUND",
            Error::UnknownPatient(_) => "UNKNOWN_PATIENT",
            Error::UnknownDisease(_) => "UNKNOWN_DISEASE",
            Error::UnknownDrug(_) => "UNKNOWN_DRUG",
            Error::UniqueViolation(_) => "UNIQUE_VIOLATION",
            Error::Validation(_) => "VALIDATION",
            Error::Conflict(_) => "CONFLICT",
            Error::WrongState(_) => "WRONG_STATE",
            Error::Blocked(_) => "BLOCKED",
            Error::OverridesRequired(_) => "OVERRIDES_REQUIRED",
            Error::NotPrescriber => "NOT_PRESCRIBER",
            Error::NotAcknowledgingPharmacist => "NOT_ACKNOWLEDGING_PHARMACIST",
            Error::AlreadyBootstrapped => "ALREADY_BOOTSTRAPPED",
            Error::Parse { .. } => "PARSE_ERROR",
            Error::Reference(_) => "REFERENCE_ERROR",
            Error::Storage(_) => "STORAGE",
            Error::Io(_) => "IO",
        }
    }

    pub fn findings(&self) -> Option<&[ValidationFinding]> {
        match self {
            Error::Blocked(f) | Error::OverridesRequired(f) => Some(f),
            _ => None,
        }
    }

    pub(crate) fn wrong_state(what: &str, status: crate::domain::PrescriptionStatus) -> Self {
        Error::WrongState(format!("cannot {what} a prescription in state {status}"))
    }
}
