use std::fmt;

use chromatwin::acquisition::AcquisitionError;
use chromatwin::recipe::seed_recipes;
use chromatwin::store::StoreError;
use chromatwin::twin::CampaignError;
use chromatwin::vision::VisionError;
use thiserror::Error;

use crate::ops::OpError;

/// Failure category; each maps to a fixed process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Vision,
    Storage,
    Model,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 1,
            ErrorKind::Vision => 2,
            ErrorKind::Storage => 3,
            ErrorKind::Model => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Usage => "usage",
            ErrorKind::Vision => "vision",
            ErrorKind::Storage => "storage",
            ErrorKind::Model => "model",
        }
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind}: {message}")]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        CliError::new(ErrorKind::Usage, message)
    }

    pub fn storage(message: impl Into<String>) -> Self {
        CliError::new(ErrorKind::Storage, message)
    }

    /// `error: <kind>: <message>` on a single line.
    pub fn line(&self) -> String {
        let flat: Vec<&str> = self.message.split_whitespace().collect();
        format!("error: {}: {}", self.kind, flat.join(" "))
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        let kind = match e {
            StoreError::Validation(_) | StoreError::Csv { .. } => ErrorKind::Usage,
            StoreError::Io(_) | StoreError::Corrupt { .. } => ErrorKind::Storage,
        };
        CliError::new(kind, e.to_string())
    }
}

impl From<VisionError> for CliError {
    fn from(e: VisionError) -> Self {
        let kind = match e {
            VisionError::InvalidGeometry(_) => ErrorKind::Usage,
            VisionError::Encode(_) => ErrorKind::Storage,
            _ => ErrorKind::Vision,
        };
        CliError::new(kind, e.to_string())
    }
}

/// Guidance for an empty (or fully filtered-out) store.
pub fn no_records() -> CliError {
    let seeds: Vec<String> = seed_recipes().iter().map(|r| format!("({r})")).collect();
    CliError::new(
        ErrorKind::Model,
        format!(
            "no experiment records match; measure and submit the seed recipes first (red,yellow,blue,green): {}",
            seeds.join(" ")
        ),
    )
}

impl From<AcquisitionError> for CliError {
    fn from(e: AcquisitionError) -> Self {
        match e {
            AcquisitionError::EmptyRecords => no_records(),
            other => CliError::new(ErrorKind::Model, other.to_string()),
        }
    }
}

impl From<CampaignError> for CliError {
    fn from(e: CampaignError) -> Self {
        match e {
            CampaignError::Acquisition(e) => e.into(),
            CampaignError::Store(e) => e.into(),
            other => CliError::usage(other.to_string()),
        }
    }
}

impl From<OpError> for CliError {
    fn from(e: OpError) -> Self {
        match e {
            OpError::Store(e) => e.into(),
            OpError::Vision(e) => e.into(),
            OpError::Model(e) => e.into(),
            OpError::Invalid(m) => CliError::usage(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::storage(e.to_string())
    }
}
