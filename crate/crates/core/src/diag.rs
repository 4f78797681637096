use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Info,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DiagCode {
    // annotation level
    UnknownType,
    DuplicateMarkup,
    EmptyMarkup,
    DuplicateParameter,
    ExpandedOutputLinked,
    ProfileMismatch,
    MissingPart,
    UnknownPart,
    MissingRefersTo,
    UnknownRefersTo,
    NotDataProcessing,
    // workflow level
    UnknownParameter,
    InvalidLinkSource,
    InvalidLinkTarget,
    UnboundInput,
    UnboundOutput,
    MultiplyBound,
    DuplicateLink,
    IncompatibleLink,
    DataflowCycle,
    UnlinkedParameter,
    // mock request checks
    MalformedXml,
    MissingBody,
    WrongOperation,
    WrongNamespace,
    MissingChild,
    UnknownChild,
    DuplicateChild,
    OrderMismatch,
}

impl fmt::Display for DiagCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: DiagCode,
    pub subject: String,
    pub message: String,
}

impl Diagnostic {
    pub fn error(code: DiagCode, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            code,
            subject: subject.into(),
            message: message.into(),
        }
    }

    pub fn info(code: DiagCode, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Info,
            code,
            subject: subject.into(),
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Info => "info",
        };
        write!(f, "{sev}[{}] {}: {}", self.code, self.subject, self.message)
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}
