use mindstate_core::{ActionError, GraphError, SettingError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },
    #[error("non-finite gradient for {param}[{index}]")]
    NonFiniteGradient { param: String, index: usize },
    #[error("empty candidate list")]
    EmptyCandidateList,
    #[error("every candidate is masked")]
    AllMasked,
    #[error("loss diverged (non-finite) at epoch {epoch}, episode {episode}")]
    DivergedLoss { epoch: usize, episode: usize },
    #[error("speaker {0:?} is not an entity of the setting")]
    UnknownSpeaker(String),
    #[error("checkpoint mismatch: {0}")]
    CheckpointMismatch(String),
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Setting(#[from] SettingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn mismatch(context: &'static str, expected: impl ToString, got: impl ToString) -> NnError {
    NnError::DimensionMismatch {
        context,
        expected: expected.to_string(),
        got: got.to_string(),
    }
}
