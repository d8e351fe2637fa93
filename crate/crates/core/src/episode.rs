//! Episode records: a setting plus an ordered list of turns.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::GraphConfig;
use crate::setting::{parse_setting, SettingRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TurnKind {
    Utterance,
    Action,
    Emote,
}

impl TurnKind {
    pub const ALL: [TurnKind; 3] = [TurnKind::Utterance, TurnKind::Action, TurnKind::Emote];

    pub fn as_str(self) -> &'static str {
        match self {
            TurnKind::Utterance => "utterance",
            TurnKind::Action => "action",
            TurnKind::Emote => "emote",
        }
    }
}

pub type CandidateKind = TurnKind;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub text: String,
    pub kind: CandidateKind,
}

impl Candidate {
    pub fn new(text: impl Into<String>, kind: CandidateKind) -> Self {
        Candidate {
            text: text.into(),
            kind,
        }
    }

    /// Emote if the text names an emote, action if it starts with an action
    /// verb, utterance otherwise.
    pub fn classify(text: &str, emotes: &[String]) -> Candidate {
        let kind = if emote_name(text, emotes).is_some() {
            CandidateKind::Emote
        } else if text
            .split_whitespace()
            .next()
            .is_some_and(|w| crate::actions::Verb::parse(&w.to_lowercase()).is_some())
        {
            CandidateKind::Action
        } else {
            CandidateKind::Utterance
        };
        Candidate::new(text, kind)
    }
}

/// LIGHT's emote vocabulary.
pub const DEFAULT_EMOTES: [&str; 22] = [
    "applaud", "blush", "cry", "dance", "frown", "gasp", "grin", "groan", "growl", "laugh", "nod", "nudge", "ponder",
    "pout", "scream", "shrug", "sigh", "smile", "stare", "wave", "wink", "yawn",
];

pub fn default_emotes() -> Vec<String> {
    DEFAULT_EMOTES.iter().map(|s| s.to_string()).collect()
}

/// Returns the emote named by `text` (`smile` or `gesture smile`).
pub fn emote_name<'a>(text: &'a str, emotes: &[String]) -> Option<&'a str> {
    let t = text.trim();
    let name = t.strip_prefix("gesture ").map(str::trim).unwrap_or(t);
    emotes.iter().any(|e| e.eq_ignore_ascii_case(name)).then_some(name)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub speaker: String,
    pub kind: TurnKind,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_index: Option<usize>,
}

impl Turn {
    pub fn new(speaker: impl Into<String>, kind: TurnKind, text: impl Into<String>) -> Self {
        Turn {
            speaker: speaker.into(),
            kind,
            text: text.into(),
            candidates: None,
            gold_index: None,
        }
    }

    /// Candidates typed with this turn's kind.
    pub fn typed_candidates(&self) -> Option<Vec<Candidate>> {
        self.candidates
            .as_ref()
            .map(|cs| cs.iter().map(|c| Candidate::new(c.clone(), self.kind)).collect())
    }

    pub fn is_target(&self) -> bool {
        self.candidates.is_some() && self.gold_index.is_some()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Valid,
    SeenTest,
    UnseenTest,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::Train, Split::Valid, Split::SeenTest, Split::UnseenTest];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::SeenTest => "seen_test",
            Split::UnseenTest => "unseen_test",
        }
    }

    pub fn parse(s: &str) -> Option<Split> {
        Split::ALL.into_iter().find(|x| x.as_str() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Episode {
    pub id: String,
    pub split: Split,
    pub setting: SettingRecord,
    pub turns: Vec<Turn>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("episode {episode}: {message}")]
pub struct EpisodeError {
    pub episode: String,
    pub message: String,
}

impl Episode {
    /// Checks structural invariants (not action feasibility, which replay checks).
    pub fn validate(&self, config: GraphConfig) -> Result<(), EpisodeError> {
        let err = |message: String| EpisodeError {
            episode: self.id.clone(),
            message,
        };
        if self.turns.is_empty() {
            return Err(err("has no turns".into()));
        }
        parse_setting(&self.setting, config).map_err(|e| err(format!("setting: {e}")))?;
        let agents = [self.setting.self_name(), self.setting.partner_name()];
        for (i, turn) in self.turns.iter().enumerate() {
            if !agents.contains(&turn.speaker.to_lowercase()) {
                return Err(err(format!("turn {i}: unknown speaker {:?}", turn.speaker)));
            }
            match (&turn.candidates, turn.gold_index) {
                (None, Some(_)) => return Err(err(format!("turn {i}: gold_index without candidates"))),
                (Some(c), _) if c.is_empty() => return Err(err(format!("turn {i}: empty candidate list"))),
                (Some(c), Some(g)) if g >= c.len() => {
                    return Err(err(format!(
                        "turn {i}: gold_index {g} out of range for {} candidates",
                        c.len()
                    )))
                }
                (Some(c), Some(g)) if c[g] != turn.text => {
                    return Err(err(format!("turn {i}: gold candidate differs from turn text")))
                }
                _ => {}
            }
        }
        Ok(())
    }
}
