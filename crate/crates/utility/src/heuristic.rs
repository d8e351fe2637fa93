//! Lexicon-driven stand-in for a learned preference model.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::query::{UtilityError, UtilityQuery, UtilityScorer};

pub const LEXICON_VERSION: u32 = 1;

const BUILTIN: &str = include_str!("../data/lexicon.json");

/// Fires when the context mentions any `context` term and the candidate any
/// `candidate` term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextRule {
    pub context: Vec<String>,
    pub candidate: Vec<String>,
    pub bonus: f64,
}

/// Terms are lowercase words or space-separated phrases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lexicon {
    pub version: u32,
    pub prosocial: BTreeMap<String, f64>,
    pub antisocial: BTreeMap<String, f64>,
    #[serde(default)]
    pub context_rules: Vec<ContextRule>,
}

impl Lexicon {
    pub fn builtin() -> Lexicon {
        Lexicon::from_json(BUILTIN).expect("bundled lexicon is valid")
    }

    pub fn from_json(raw: &str) -> Result<Lexicon, UtilityError> {
        let lex: Lexicon = serde_json::from_str(raw).map_err(|e| UtilityError::LexiconFormat(e.to_string()))?;
        lex.validate()?;
        Ok(lex)
    }

    pub fn load(path: &Path) -> Result<Lexicon, UtilityError> {
        let raw =
            std::fs::read_to_string(path).map_err(|_| UtilityError::MissingLexicon(path.display().to_string()))?;
        Lexicon::from_json(&raw)
    }

    fn validate(&self) -> Result<(), UtilityError> {
        if self.version != LEXICON_VERSION {
            return Err(UtilityError::LexiconFormat(format!(
                "version {} (expected {LEXICON_VERSION})",
                self.version
            )));
        }
        let weights = self
            .prosocial
            .values()
            .chain(self.antisocial.values())
            .chain(self.context_rules.iter().map(|r| &r.bonus));
        if weights.into_iter().any(|w| !w.is_finite()) {
            return Err(UtilityError::LexiconFormat("non-finite weight".into()));
        }
        Ok(())
    }
}

/// Lowercase word tokens; apostrophes inside words are kept.
pub fn words(text: &str) -> Vec<String> {
    text.replace('’', "'")
        .to_lowercase()
        .split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .map(|w| w.trim_matches('\''))
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

fn occurrences(tokens: &[String], term: &str) -> usize {
    let parts: Vec<&str> = term.split_whitespace().collect();
    if parts.is_empty() || parts.len() > tokens.len() {
        return 0;
    }
    tokens
        .windows(parts.len())
        .filter(|w| w.iter().zip(&parts).all(|(a, b)| a == b))
        .count()
}

fn mentions_any(tokens: &[String], terms: &[String]) -> bool {
    terms.iter().any(|t| occurrences(tokens, t) > 0)
}

#[derive(Clone, Debug)]
pub struct HeuristicScorer {
    pub lexicon: Lexicon,
}

impl HeuristicScorer {
    pub fn new(lexicon: Lexicon) -> Self {
        HeuristicScorer { lexicon }
    }

    pub fn builtin() -> Self {
        HeuristicScorer::new(Lexicon::builtin())
    }

    /// Prosocial weight minus antisocial weight, plus fired rule bonuses.
    /// Rules never fire for a candidate with any antisocial hit.
    pub fn candidate_score(&self, context_words: &[String], candidate: &str) -> f64 {
        let toks = words(candidate);
        let lex = &self.lexicon;
        let pro: f64 = lex
            .prosocial
            .iter()
            .map(|(t, w)| w * occurrences(&toks, t) as f64)
            .sum();
        let anti: f64 = lex
            .antisocial
            .iter()
            .map(|(t, w)| w * occurrences(&toks, t) as f64)
            .sum();
        let bonus: f64 = lex
            .context_rules
            .iter()
            .filter(|_| anti == 0.0)
            .filter(|r| mentions_any(context_words, &r.context) && mentions_any(&toks, &r.candidate))
            .map(|r| r.bonus)
            .sum();
        pro - anti + bonus
    }
}

impl UtilityScorer for HeuristicScorer {
    fn score(&self, query: &UtilityQuery) -> Result<[f64; 3], UtilityError> {
        let ctx = words(&query.context);
        Ok([0, 1, 2].map(|i| self.candidate_score(&ctx, &query.candidates[i])))
    }
}
