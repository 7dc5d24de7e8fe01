//! Application errors and their process exit codes.

use std::fmt;
use std::path::Path;

/// Exit code classes: 1 usage, 2 data, 3 numeric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Usage,
    Data,
    Numeric,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Usage => "usage",
            Kind::Data => "data",
            Kind::Numeric => "numeric",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppError {
    pub kind: Kind,
    pub reason: String,
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error: {}", self.kind.as_str(), self.reason)
    }
}

impl std::error::Error for AppError {}

pub type Result<T, E = AppError> = std::result::Result<T, E>;

impl AppError {
    pub fn usage(reason: impl Into<String>) -> Self {
        AppError {
            kind: Kind::Usage,
            reason: reason.into(),
        }
    }

    pub fn data(reason: impl Into<String>) -> Self {
        AppError {
            kind: Kind::Data,
            reason: reason.into(),
        }
    }

    pub fn numeric(reason: impl Into<String>) -> Self {
        AppError {
            kind: Kind::Numeric,
            reason: reason.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            Kind::Usage => 1,
            Kind::Data => 2,
            Kind::Numeric => 3,
        }
    }

    /// `namefly: error=<kind> code=<n> reason="<json string>"`, one line.
    pub fn line(&self) -> String {
        format!(
            "namefly: error={} code={} reason={}",
            self.kind.as_str(),
            self.exit_code(),
            serde_json::to_string(&self.reason).unwrap_or_default()
        )
    }

    /// Prefix the reason with a file path.
    pub fn at(self, path: &Path) -> Self {
        AppError {
            reason: format!("{}: {}", path.display(), self.reason),
            ..self
        }
    }
}

impl From<namefly_core::Error> for AppError {
    fn from(e: namefly_core::Error) -> Self {
        use namefly_core::Error as E;
        match e {
            E::NonFinite(_) => AppError::numeric(e.to_string()),
            E::Config(_) => AppError::usage(e.to_string()),
            _ => AppError::data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::data(e.to_string())
    }
}

impl From<serde_json::Error> for AppError {
    fn from(e: serde_json::Error) -> Self {
        AppError::data(e.to_string())
    }
}
