//! Dialogue context rewriting for the utility scorer.

use mindstate_core::{SettingRecord, Turn, TurnKind};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RephraseConfig {
    pub third_person: bool,
    pub max_turns: usize,
    pub include_persona: bool,
}

impl Default for RephraseConfig {
    fn default() -> Self {
        RephraseConfig {
            third_person: true,
            max_turns: 4,
            include_persona: false,
        }
    }
}

enum Form {
    Plain,
    Possessive,
    Verb(&'static str),
}

enum Role {
    Speaker,
    Listener,
}

/// Lowercase pronoun → replacement. Apostrophes are ASCII after normalization.
const TABLE: [(&str, Role, Form); 19] = [
    ("i", Role::Speaker, Form::Plain),
    ("me", Role::Speaker, Form::Plain),
    ("myself", Role::Speaker, Form::Plain),
    ("my", Role::Speaker, Form::Possessive),
    ("mine", Role::Speaker, Form::Possessive),
    ("i'm", Role::Speaker, Form::Verb("is")),
    ("i've", Role::Speaker, Form::Verb("has")),
    ("i'll", Role::Speaker, Form::Verb("will")),
    ("i'd", Role::Speaker, Form::Verb("would")),
    ("you", Role::Listener, Form::Plain),
    ("yourself", Role::Listener, Form::Plain),
    ("your", Role::Listener, Form::Possessive),
    ("yours", Role::Listener, Form::Possessive),
    ("you're", Role::Listener, Form::Verb("is")),
    ("you've", Role::Listener, Form::Verb("has")),
    ("you'll", Role::Listener, Form::Verb("will")),
    ("you'd", Role::Listener, Form::Verb("would")),
    ("ya", Role::Listener, Form::Plain),
    ("thee", Role::Listener, Form::Plain),
];

/// Whether `word` (any case) is a first- or second-person pronoun that
/// third-person rephrasing replaces.
pub fn is_substituted_pronoun(word: &str) -> bool {
    let w = word.to_lowercase().replace('’', "'");
    TABLE.iter().any(|(p, _, _)| *p == w)
}

fn replacement(word: &str, speaker: &str, listener: &str) -> Option<String> {
    let w = word.to_lowercase();
    let (_, role, form) = TABLE.iter().find(|(p, _, _)| *p == w)?;
    let who = match role {
        Role::Speaker => speaker,
        Role::Listener => listener,
    };
    Some(match form {
        Form::Plain => format!("the {who}"),
        Form::Possessive => format!("the {who}'s"),
        Form::Verb(v) => format!("the {who} {v}"),
    })
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\''
}

/// Replaces first/second-person pronouns with `the <speaker>` /
/// `the <listener>`; everything else, punctuation included, is kept.
pub fn to_third_person(text: &str, speaker: &str, listener: &str) -> String {
    let text = text.replace('’', "'");
    let mut out = String::with_capacity(text.len() + 16);
    let mut chars = text.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        let word = is_word_char(c);
        let mut end = start;
        while let Some(&(i, c)) = chars.peek() {
            if is_word_char(c) != word {
                break;
            }
            end = i + c.len_utf8();
            chars.next();
        }
        let run = &text[start..end];
        if !word {
            out.push_str(run);
            continue;
        }
        // quotes hugging the word stay as punctuation
        let core = run.trim_matches('\'');
        let lead = &run[..run.len() - run.trim_start_matches('\'').len()];
        let trail = &run[run.trim_end_matches('\'').len()..];
        match replacement(core, speaker, listener) {
            Some(r) if !core.is_empty() => {
                out.push_str(lead);
                out.push_str(&r);
                out.push_str(trail);
            }
            _ => out.push_str(run),
        }
    }
    out
}

/// Setting sentence, optional persona, then the last `max_turns` turns.
pub fn rephrase_context(setting: &SettingRecord, history: &[Turn], config: &RephraseConfig) -> String {
    let me = setting.self_name();
    let partner = setting.partner_name();
    let mut lines = vec![format!(
        "The {me} and the {partner} are in the {}.",
        setting.setting_name.trim()
    )];
    let persona = setting.self_agent.persona.trim();
    if config.include_persona && !persona.is_empty() {
        let persona = if config.third_person {
            to_third_person(persona, &me, &partner)
        } else {
            persona.to_string()
        };
        lines.push(format!("The {me} is described as: {persona}"));
    }
    let start = history.len().saturating_sub(config.max_turns);
    for turn in &history[start..] {
        let speaker = turn.speaker.trim().to_lowercase();
        let listener = if speaker == me { &partner } else { &me };
        let line = if config.third_person {
            let verb = match turn.kind {
                TurnKind::Utterance => "said",
                TurnKind::Action | TurnKind::Emote => "did",
            };
            format!(
                "The {speaker} {verb}: {}",
                to_third_person(&turn.text, &speaker, listener)
            )
        } else {
            format!("{speaker}: {}", turn.text)
        };
        lines.push(line);
    }
    lines.join("\n")
}
