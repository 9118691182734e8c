use std::fmt;

use modscat_core::Error as CoreError;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Validation,
    Runtime,
    Precondition,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Validation => 2,
            ErrorKind::Runtime => 3,
            ErrorKind::Precondition => 4,
        }
    }
}

/// Machine-readable failure record.
#[derive(Debug, Clone, Serialize, thiserror::Error)]
pub struct RunError {
    pub kind: ErrorKind,
    pub module: String,
    pub operation: String,
    pub messages: Vec<String>,
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} error in {}::{}: {}", self.kind, self.module, self.operation, self.messages.join("; "))
    }
}

impl RunError {
    pub fn new(kind: ErrorKind, module: &str, operation: &str, message: impl Into<String>) -> Self {
        Self { kind, module: module.into(), operation: operation.into(), messages: vec![message.into()] }
    }

    pub fn validation(messages: Vec<String>) -> Self {
        Self { kind: ErrorKind::Validation, module: "config".into(), operation: "validate".into(), messages }
    }

    pub fn io(operation: &str, e: impl fmt::Display) -> Self {
        Self::new(ErrorKind::Runtime, "io", operation, e.to_string())
    }

    /// Wraps a core error raised by `module::operation`.
    pub fn core(module: &str, operation: &str, e: CoreError) -> Self {
        let kind = match e {
            CoreError::Validation(_) => ErrorKind::Validation,
            CoreError::Precondition(_) => ErrorKind::Precondition,
            _ => ErrorKind::Runtime,
        };
        Self::new(kind, module, operation, e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }
}

pub type RunResult<T> = Result<T, RunError>;

/// Attaches a module/operation context to core results.
pub trait Context<T> {
    fn ctx(self, module: &str, operation: &str) -> RunResult<T>;
}

impl<T> Context<T> for modscat_core::Result<T> {
    fn ctx(self, module: &str, operation: &str) -> RunResult<T> {
        self.map_err(|e| RunError::core(module, operation, e))
    }
}
