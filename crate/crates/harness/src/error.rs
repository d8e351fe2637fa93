use std::fmt;
use std::path::PathBuf;

use mindstate_core::setting::ParseError;
use mindstate_core::{ActionError, GraphError, SettingError};
use mindstate_nn::NnError;
use serde::Serialize;
use thiserror::Error;

/// One rejected input record.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RecordProblem {
    /// 1-based line (JSONL) or record index (JSON arrays).
    pub line: usize,
    pub episode: Option<String>,
    pub message: String,
}

impl fmt::Display for RecordProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}", self.line)?;
        if let Some(id) = &self.episode {
            write!(f, " (episode {id})")?;
        }
        write!(f, ": {}", self.message)
    }
}

fn join(problems: &[RecordProblem]) -> String {
    problems.iter().map(|p| p.to_string()).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}: {err}", path.display())]
    Io { path: PathBuf, err: std::io::Error },
    #[error("{} invalid record(s):\n{}", .0.len(), join(.0))]
    Schema(Vec<RecordProblem>),
    #[error("episode {episode}: replay aborted at turn {turn}: {reason}")]
    ReplayAborted {
        episode: String,
        turn: usize,
        reason: String,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("setting: {0}")]
    SettingText(#[from] ParseError),
    #[error("setting: {0}")]
    Setting(#[from] SettingError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, err: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), err }
    }

    /// 1 for invalid input, 2 for runtime failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Schema(_)
            | HarnessError::ReplayAborted { .. }
            | HarnessError::Config(_)
            | HarnessError::SettingText(_)
            | HarnessError::Setting(_)
            | HarnessError::Nn(NnError::CheckpointMismatch(_)) => 1,
            HarnessError::Io { .. } | HarnessError::Graph(_) | HarnessError::Action(_) | HarnessError::Nn(_) => 2,
        }
    }
}
