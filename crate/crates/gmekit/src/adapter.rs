//! Bridge to external conic solvers: the serialized program is piped to a
//! child process's stdin and one solution document is read back from its
//! stdout. Any solver can sit behind the protocol; the shipped
//! `tools/sdp_adapter.py` wraps SCS.

use crate::io::{ConicProgramJson, ConicSolutionJson};
use crate::sdp::ConicProgram;
use std::io::Write;
use std::process::{Command, Stdio};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("failed to run external solver: {0}")]
    Io(#[from] std::io::Error),
    #[error("external solver exited with {code:?}: {stderr}")]
    Exited { code: Option<i32>, stderr: String },
    #[error("malformed solution document: {0}")]
    Protocol(#[from] serde_json::Error),
}

/// An external solver invoked as a child process per solve.
#[derive(Debug, Clone)]
pub struct ExternalSolver {
    program: String,
    args: Vec<String>,
}

impl ExternalSolver {
    pub fn new(program: impl Into<String>) -> Self {
        Self { program: program.into(), args: Vec::new() }
    }

    pub fn arg(mut self, a: impl Into<String>) -> Self {
        self.args.push(a.into());
        self
    }

    pub fn solve(&self, program: &ConicProgram) -> Result<ConicSolutionJson, AdapterError> {
        let payload = serde_json::to_vec(&ConicProgramJson::from_program(program))?;
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()?;
        // the adapter reads stdin to EOF before it writes anything, so a
        // sequential write-then-drain cannot deadlock
        child.stdin.take().expect("piped stdin").write_all(&payload)?;
        let out = child.wait_with_output()?;
        if !out.status.success() {
            return Err(AdapterError::Exited {
                code: out.status.code(),
                stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
            });
        }
        Ok(serde_json::from_slice(&out.stdout)?)
    }
}
