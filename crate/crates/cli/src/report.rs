//! Machine-readable report shared by every verb.

use nlogflow_core::diag::Diagnostic;
use serde::{Deserialize, Serialize};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub verb: String,
    pub inputs: Vec<String>,
    pub ok: bool,
    pub exit_code: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub diagnostics: Vec<Diagnostic>,
    /// Verb-specific payload (verdict, run report, query rows...).
    pub verdict: serde_json::Value,
    pub artifacts: Vec<String>,
}

impl Report {
    pub fn new(verb: &str, inputs: Vec<String>) -> Self {
        Report {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            verb: verb.to_string(),
            inputs,
            ok: true,
            exit_code: EXIT_OK,
            error: None,
            diagnostics: Vec::new(),
            verdict: serde_json::Value::Null,
            artifacts: Vec::new(),
        }
    }

    pub fn verdict(&mut self, v: &impl Serialize) {
        self.verdict = serde_json::to_value(v).expect("report payloads serialize");
    }

    pub fn exit(&mut self, code: i32) {
        self.exit_code = code;
        self.ok = code == EXIT_OK;
    }

    pub fn fail(&mut self, code: i32, message: impl Into<String>) {
        self.exit(code);
        self.error = Some(message.into());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// A verb's result: the structured report plus the human rendering.
pub struct Outcome {
    pub report: Report,
    pub text: String,
}
