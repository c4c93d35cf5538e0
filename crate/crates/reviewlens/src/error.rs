use std::path::Path;

use serde_json::json;

/// CLI failure, split by exit status: 1 for bad configuration or arguments,
/// 2 for unreadable or invalid data.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{message}")]
    Validation { field: Option<String>, message: String },
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Validation {
            field: Some(field.into()),
            message: message.into(),
        }
    }

    pub fn data_at(path: &Path, message: impl std::fmt::Display) -> Self {
        CliError::Data(format!("{}: {message}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } => 1,
            CliError::Data(_) => 2,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            CliError::Validation { field, message } => json!({
                "error": { "kind": "validation", "field": field, "message": message }
            }),
            CliError::Data(message) => json!({
                "error": { "kind": "data", "message": message }
            }),
        }
    }
}

impl From<reviewlens_core::Error> for CliError {
    fn from(e: reviewlens_core::Error) -> Self {
        use reviewlens_core::Error as E;
        match e {
            E::Config { field, message } => CliError::validation(field, message),
            E::TemplateSlot { name, .. } => CliError::validation(format!("templates.{name}"), e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
