use std::fmt;

use napforge::featurize::FeaturizeError;
use napforge::hdbscan::HdbscanError;
use napforge::ingest::IngestError;
use napforge::metric::MetricError;
use napforge::report::ReportError;
use napforge::synth::SynthError;
use napforge::validity::ValidityError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Runtime,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 2,
            ErrorClass::Data => 3,
            ErrorClass::Runtime => 4,
        }
    }
}

/// A failure with the pipeline stage it came from.
#[derive(Debug)]
pub struct CliError {
    pub class: ErrorClass,
    pub stage: &'static str,
    pub message: String,
}

impl CliError {
    pub fn config(stage: &'static str, message: impl Into<String>) -> Self {
        Self {
            class: ErrorClass::Config,
            stage,
            message: message.into(),
        }
    }

    pub fn data(stage: &'static str, message: impl Into<String>) -> Self {
        Self {
            class: ErrorClass::Data,
            stage,
            message: message.into(),
        }
    }

    pub fn runtime(stage: &'static str, message: impl Into<String>) -> Self {
        Self {
            class: ErrorClass::Runtime,
            stage,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.class.exit_code()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} failed: {}", self.stage, self.message)
    }
}

impl std::error::Error for CliError {}

/// Attaches a stage name and an error class to library errors.
pub trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

pub trait Classify: fmt::Display {
    fn class(&self) -> ErrorClass;
}

impl<T, E: Classify> Stage<T> for Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|e| CliError {
            class: e.class(),
            stage,
            message: e.to_string(),
        })
    }
}

impl Classify for IngestError {
    fn class(&self) -> ErrorClass {
        match self {
            IngestError::Io { .. } => ErrorClass::Runtime,
            _ => ErrorClass::Data,
        }
    }
}

impl Classify for FeaturizeError {
    fn class(&self) -> ErrorClass {
        match self {
            FeaturizeError::Config(_) => ErrorClass::Config,
            FeaturizeError::Ingest(e) => e.class(),
            _ => ErrorClass::Data,
        }
    }
}

impl Classify for MetricError {
    fn class(&self) -> ErrorClass {
        match self {
            MetricError::Unknown(_) => ErrorClass::Config,
            MetricError::Ingest(e) => e.class(),
            _ => ErrorClass::Data,
        }
    }
}

impl Classify for HdbscanError {
    fn class(&self) -> ErrorClass {
        match self {
            HdbscanError::Config(_) => ErrorClass::Config,
            HdbscanError::Metric(e) => e.class(),
            _ => ErrorClass::Data,
        }
    }
}

impl Classify for ValidityError {
    fn class(&self) -> ErrorClass {
        match self {
            ValidityError::Metric(e) => e.class(),
            _ => ErrorClass::Data,
        }
    }
}

impl Classify for SynthError {
    fn class(&self) -> ErrorClass {
        match self {
            SynthError::Invalid(_) => ErrorClass::Config,
            SynthError::Ingest(e) => e.class(),
        }
    }
}

impl Classify for ReportError {
    fn class(&self) -> ErrorClass {
        match self {
            ReportError::Grid(_) => ErrorClass::Config,
            ReportError::Io { .. } | ReportError::Csv(_) => ErrorClass::Runtime,
            ReportError::Featurize(e) => e.class(),
            ReportError::Metric(e) => e.class(),
            ReportError::Hdbscan(e) => e.class(),
            ReportError::Validity(e) => e.class(),
            ReportError::Ingest(e) => e.class(),
            ReportError::Misaligned(_) => ErrorClass::Data,
        }
    }
}

impl Classify for std::io::Error {
    fn class(&self) -> ErrorClass {
        ErrorClass::Runtime
    }
}

impl Classify for serde_json::Error {
    fn class(&self) -> ErrorClass {
        if self.is_io() {
            ErrorClass::Runtime
        } else {
            ErrorClass::Config
        }
    }
}
