//! One self-describing document per invocation.

use serde_json::{json, Value};

use crate::canonical;
use crate::error::{CliError, EXIT_FAILED, EXIT_INPUT, EXIT_OK};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Failed,
    InputError,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Ok => EXIT_OK,
            Self::Failed => EXIT_FAILED,
            Self::InputError => EXIT_INPUT,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::Failed => "failed",
            Self::InputError => "input-error",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    /// Echo of the resolved inputs; hashed into `inputs_digest`.
    pub inputs: Value,
    pub seed: u64,
    pub results: Value,
    /// What each reported number is checked against.
    pub notes: Vec<String>,
    pub status: Status,
    /// Human-readable lines for the diagnostic stream.
    pub summary: Vec<String>,
}

impl Report {
    pub fn new(command: &str, inputs: Value, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            inputs,
            seed,
            results: Value::Null,
            notes: Vec::new(),
            status: Status::Ok,
            summary: Vec::new(),
        }
    }

    pub fn error(command: &str, inputs: Value, seed: u64, err: &CliError) -> Self {
        let mut r = Self::new(command, inputs, seed);
        r.results = json!({ "error": err.to_string() });
        r.status = if err.exit_code() == EXIT_INPUT { Status::InputError } else { Status::Failed };
        r.summary.push(format!("error: {err}"));
        r
    }

    pub fn inputs_digest(&self) -> String {
        canonical::digest(&json!({ "command": self.command, "inputs": self.inputs, "seed": self.seed }))
    }

    pub fn to_value(&self) -> Value {
        json!({
            "command": self.command,
            "inputs": self.inputs,
            "inputs_digest": self.inputs_digest(),
            "seed": self.seed,
            "results": self.results,
            "notes": self.notes,
            "status": self.status.name(),
            "exit_code": self.status.exit_code(),
        })
    }

    pub fn render(&self) -> String {
        canonical::value_to_string(&self.to_value())
    }
}
