use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::args::RunConfig;

pub const EXIT_PASS: u8 = 0;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_ASSERTION: u8 = 3;
pub const EXIT_INCOMPLETE: u8 = 4;
pub const EXIT_BUDGET: u8 = 5;

/// A number the run was compared against, with where it comes from.
#[derive(Debug, Serialize)]
pub struct Reference {
    pub name: String,
    pub value: Value,
    pub source: String,
}

#[derive(Debug, Serialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub result: Value,
    pub references: Vec<Reference>,
    pub assertions: Vec<Assertion>,
    pub warnings: Vec<String>,
}

impl Outcome {
    pub fn new(result: impl Serialize) -> Self {
        Outcome { result: to_value(result), ..Default::default() }
    }

    pub fn reference(mut self, name: &str, value: impl Serialize, source: &str) -> Self {
        self.references.push(Reference { name: name.into(), value: to_value(value), source: source.into() });
        self
    }

    pub fn assert(mut self, name: &str, pass: bool) -> Self {
        self.assertions.push(Assertion { name: name.into(), pass });
        self
    }
}

pub fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).unwrap_or_else(|e| Value::String(format!("unserializable: {e}")))
}

#[derive(Debug, Serialize)]
pub struct Report<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a RunConfig,
    /// Seconds since the Unix epoch; the only field that varies between
    /// identical runs.
    pub timestamp: u64,
    pub warnings: Vec<String>,
    pub references: Vec<Reference>,
    pub assertions: Vec<Assertion>,
    pub result: Value,
    pub error: Option<String>,
    pub pass: bool,
    pub exit_code: u8,
}

impl<'a> Report<'a> {
    pub fn new(config: &'a RunConfig, outcome: Result<Outcome, (String, u8)>) -> Self {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let mut warnings = config.warnings.clone();
        let (o, error, code) = match outcome {
            Ok(o) => {
                let code = if o.assertions.iter().all(|a| a.pass) { EXIT_PASS } else { EXIT_ASSERTION };
                (o, None, code)
            }
            Err((msg, code)) => (Outcome::default(), Some(msg), code),
        };
        warnings.extend(o.warnings);
        Report {
            tool: "mxchaos",
            version: env!("CARGO_PKG_VERSION"),
            command: &config.command,
            config,
            timestamp,
            warnings,
            references: o.references,
            assertions: o.assertions,
            result: o.result,
            error,
            pass: code == EXIT_PASS,
            exit_code: code,
        }
    }

    pub fn write(&self, path: Option<&Path>) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        text.push('\n');
        match path {
            Some(p) => std::fs::write(p, text),
            None => std::io::stdout().lock().write_all(text.as_bytes()),
        }
    }
}

pub fn exit_code(e: &mxchaos::Error) -> u8 {
    use mxchaos::Error::*;
    match e {
        InvalidInput(_) | ZeroHorizon | AlphabetMismatch(_) | Io(_) | Json(_) => EXIT_INVALID,
        NoSuchTuple(_) | Undefined(_) | InsufficientLength { .. } => EXIT_INCOMPLETE,
        BudgetExceeded(_) | CapExceeded { .. } => EXIT_BUDGET,
        Precondition(_) | CheckFailed(_) => EXIT_ASSERTION,
    }
}
