use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum UtilityError {
    #[error("invalid utility query: {0}")]
    InvalidQuery(String),
    #[error("lexicon not found at {0}")]
    MissingLexicon(String),
    #[error("lexicon is malformed: {0}")]
    LexiconFormat(String),
    #[error("utility scorer timed out")]
    Timeout,
    #[error("malformed scorer response: {0}")]
    MalformedResponse(String),
    #[error("scorer returned HTTP {0}")]
    Non2xx(u16),
    #[error("scorer unreachable: {0}")]
    Transport(String),
}

/// Context plus exactly three candidates, mirroring
/// `[CLS] w_1 … w_n [SEP] c_1 [SEP] c_2 [SEP] c_3`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UtilityQuery {
    pub context: String,
    pub candidates: [String; 3],
}

impl UtilityQuery {
    pub fn new(context: impl Into<String>, candidates: [String; 3]) -> Result<Self, UtilityError> {
        let context = context.into();
        if context.trim().is_empty() {
            return Err(UtilityError::InvalidQuery("empty context".into()));
        }
        Ok(UtilityQuery { context, candidates })
    }

    /// Builds a query from one to three candidates, repeating the last one
    /// to fill the remaining slots.
    pub fn padded(context: impl Into<String>, candidates: &[String]) -> Result<Self, UtilityError> {
        let last = candidates
            .last()
            .ok_or_else(|| UtilityError::InvalidQuery("no candidates".into()))?;
        if candidates.len() > 3 {
            return Err(UtilityError::InvalidQuery(format!("{} candidates", candidates.len())));
        }
        let slot = |i: usize| candidates.get(i).unwrap_or(last).clone();
        Self::new(context, [slot(0), slot(1), slot(2)])
    }
}

/// A preference scorer. Only the ordering of the three scores is used.
pub trait UtilityScorer {
    fn score(&self, query: &UtilityQuery) -> Result<[f64; 3], UtilityError>;
}

impl<S: UtilityScorer + ?Sized> UtilityScorer for &S {
    fn score(&self, query: &UtilityQuery) -> Result<[f64; 3], UtilityError> {
        (**self).score(query)
    }
}

impl<S: UtilityScorer + ?Sized> UtilityScorer for Box<S> {
    fn score(&self, query: &UtilityQuery) -> Result<[f64; 3], UtilityError> {
        (**self).score(query)
    }
}

/// Gives every candidate the same score.
#[derive(Clone, Copy, Debug, Default)]
pub struct ConstantScorer(pub f64);

impl UtilityScorer for ConstantScorer {
    fn score(&self, _: &UtilityQuery) -> Result<[f64; 3], UtilityError> {
        Ok([self.0; 3])
    }
}
