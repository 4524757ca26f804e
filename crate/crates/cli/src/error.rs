use std::fmt;
use std::path::Path;

use returnlaw::collapse::CollapseError;
use returnlaw::dist::DistError;
use returnlaw::fit::FitError;
use returnlaw::ingest::IngestError;
use returnlaw::model::ModelError;

/// Whether a failure comes from bad input/configuration or from a computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Compute,
}

#[derive(Debug)]
pub struct CliError {
    pub class: ErrorClass,
    pub stage: &'static str,
    pub message: String,
}

impl CliError {
    pub fn input(stage: &'static str, message: impl fmt::Display) -> Self {
        Self {
            class: ErrorClass::Input,
            stage,
            message: message.to_string(),
        }
    }

    pub fn compute(stage: &'static str, message: impl fmt::Display) -> Self {
        Self {
            class: ErrorClass::Compute,
            stage,
            message: message.to_string(),
        }
    }

    pub fn io(stage: &'static str, path: &Path, err: std::io::Error) -> Self {
        Self::input(stage, format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self.class {
            ErrorClass::Input => 2,
            ErrorClass::Compute => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.stage, self.message)
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;

pub fn from_ingest(e: IngestError) -> CliError {
    CliError::input("ingest", e)
}

pub fn from_dist(e: DistError) -> CliError {
    match e {
        DistError::InvalidBinWidth(_) | DistError::InvalidOrigin(_) | DistError::GeometryMismatch { .. } => {
            CliError::input("dist", e)
        }
        _ => CliError::compute("dist", e),
    }
}

pub fn from_model(e: ModelError) -> CliError {
    match e {
        ModelError::InvalidParameter(_) => CliError::input("model", e),
        _ => CliError::compute("model", e),
    }
}

pub fn from_fit(e: FitError) -> CliError {
    match e {
        FitError::InvalidRange { .. } | FitError::DuplicateTau(_) | FitError::NonPositiveSample { .. } => {
            CliError::input("fit", e)
        }
        _ => CliError::compute("fit", e),
    }
}

pub fn from_collapse(e: CollapseError) -> CliError {
    match e {
        CollapseError::NotCentred => CliError::input("collapse", e),
        CollapseError::Model(m) => from_model(m),
        _ => CliError::compute("collapse", e),
    }
}
