//! LIGHT export to episode JSONL.
//!
//! The input is a JSON array (or JSONL) of conversations:
//!
//! ```json
//! {
//!   "id": "optional",
//!   "split": "train | valid | test | seen_test | unseen_test | test_unseen",
//!   "setting": {"name": "palace", "description": "..."},
//!   "agents": [{"name": "king", "persona": "..."}, {"name": "servant", "persona": "..."}],
//!   "objects": [{"name": "a scepter", "description": "...", "tags": ["wieldable"]}],
//!   "room_objects": ["a scepter"],
//!   "carrying": {"king": ["..."]}, "wearing": {}, "wielding": {},
//!   "turns": [{"character": "king", "speech": "...", "emote": "smile", "action": "get scepter"}]
//! }
//! ```
//!
//! The first agent is the self agent. Each LIGHT turn becomes up to three
//! turns (utterance, emote, action). Self-agent turns get the gold plus
//! `distractors` texts of the same kind sampled from the whole export.
//! Missing tags default to no affordance flags; unknown tags are ignored.
//! Unplaced objects go to the room. An object whose name collides with
//! another entity gets a numeric suffix.

use std::collections::{BTreeMap, BTreeSet};

use mindstate_core::episode::DEFAULT_EMOTES;
use mindstate_core::setting::{Holder, ObjectSpec, PartnerAgent, Placement, SelfAgent};
use mindstate_core::{Episode, Flag, Flags, SettingRecord, Split, Turn, TurnKind};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{HarnessError, RecordProblem};

#[derive(Clone, Debug, Deserialize)]
pub struct LightConversation {
    #[serde(default)]
    pub id: Option<String>,
    pub split: String,
    pub setting: LightSetting,
    pub agents: Vec<LightAgent>,
    #[serde(default)]
    pub objects: Vec<LightObject>,
    #[serde(default)]
    pub room_objects: Vec<String>,
    #[serde(default)]
    pub carrying: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub wearing: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub wielding: BTreeMap<String, Vec<String>>,
    pub turns: Vec<LightTurn>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct LightSetting {
    pub name: String,
    #[serde(default)]
    pub description: String,
}

#[derive(Clone, Debug, Deserialize)]
pub struct LightAgent {
    pub name: String,
    #[serde(default)]
    pub persona: String,
}

#[derive(Clone, Debug, Deserialize)]
pub struct LightObject {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub tags: Vec<String>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct LightTurn {
    pub character: String,
    #[serde(default)]
    pub speech: Option<String>,
    #[serde(default)]
    pub emote: Option<String>,
    #[serde(default)]
    pub action: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvertOptions {
    pub distractors: usize,
    pub seed: u64,
}

impl Default for ConvertOptions {
    fn default() -> Self {
        ConvertOptions {
            distractors: 19,
            seed: 0,
        }
    }
}

fn parse_split(s: &str) -> Option<Split> {
    match s.trim().to_lowercase().as_str() {
        "train" => Some(Split::Train),
        "valid" | "validation" => Some(Split::Valid),
        "test" | "seen_test" | "test_seen" => Some(Split::SeenTest),
        "unseen_test" | "test_unseen" => Some(Split::UnseenTest),
        _ => None,
    }
}

fn norm(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

fn strip_article(name: &str) -> String {
    let n = norm(name);
    for art in ["a ", "an ", "the ", "some "] {
        if let Some(rest) = n.strip_prefix(art) {
            if !rest.is_empty() {
                return rest.to_string();
            }
        }
    }
    n
}

fn flags_from(tags: &[String]) -> Flags {
    let mut flags = Flags::empty();
    for tag in tags {
        let t = norm(tag);
        let t = t.strip_prefix("is_").unwrap_or(&t);
        if let Some(f) = Flag::parse(t).filter(|f| *f != Flag::Consumed) {
            flags.insert(f);
        }
    }
    flags
}

/// Reads a JSON array, a single JSON object, or JSONL; returns conversations
/// with their line (JSONL) or 1-based index (array).
pub fn parse_export(raw: &str) -> Result<Vec<(usize, LightConversation)>, HarnessError> {
    if raw.trim_start().starts_with('[') {
        let all: Vec<LightConversation> = serde_json::from_str(raw).map_err(|e| {
            HarnessError::Schema(vec![RecordProblem {
                line: e.line(),
                episode: None,
                message: format!("schema: {e}"),
            }])
        })?;
        return Ok(all.into_iter().enumerate().map(|(i, c)| (i + 1, c)).collect());
    }
    // a single, possibly pretty-printed, conversation
    if let Ok(one) = serde_json::from_str::<LightConversation>(raw) {
        return Ok(vec![(1, one)]);
    }
    let mut out = Vec::new();
    let mut problems = Vec::new();
    for (i, line) in raw.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        match serde_json::from_str(line) {
            Ok(c) => out.push((i + 1, c)),
            Err(e) => problems.push(RecordProblem {
                line: i + 1,
                episode: None,
                message: format!("schema: {e}"),
            }),
        }
    }
    if problems.is_empty() {
        Ok(out)
    } else {
        Err(HarnessError::Schema(problems))
    }
}

fn setting_of(c: &LightConversation) -> Result<SettingRecord, String> {
    let [me, partner] = c.agents.as_slice() else {
        return Err(format!("expected 2 agents, got {}", c.agents.len()));
    };
    let room = norm(&c.setting.name);
    let (me_name, partner_name) = (norm(&me.name), norm(&partner.name));
    let mut taken: BTreeSet<String> = [room.clone(), me_name.clone(), partner_name.clone()].into();
    // original name -> final names not yet placed
    let mut by_original: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut objects = Vec::with_capacity(c.objects.len());
    for o in &c.objects {
        let base = strip_article(&o.name);
        if base.is_empty() {
            return Err("object with empty name".into());
        }
        let mut name = base.clone();
        let mut k = 2;
        while taken.contains(&name) {
            name = format!("{base} {k}");
            k += 1;
        }
        taken.insert(name.clone());
        by_original.entry(base).or_default().push(name.clone());
        objects.push(ObjectSpec {
            name,
            description: o.description.clone(),
            flags: flags_from(&o.tags),
        });
    }
    let mut placements = Vec::new();
    let mut place = |original: &str, holder: Holder| -> Result<(), String> {
        let slot = by_original
            .get_mut(&strip_article(original))
            .filter(|v| !v.is_empty())
            .ok_or_else(|| format!("placement of undeclared or already placed object {original:?}"))?;
        placements.push(Placement {
            object_name: slot.remove(0),
            holder,
        });
        Ok(())
    };
    for o in &c.room_objects {
        place(o, Holder::Room)?;
    }
    let held = [
        (&c.carrying, Holder::SelfCarrying, Holder::PartnerCarrying),
        (&c.wearing, Holder::SelfWearing, Holder::PartnerWearing),
        (&c.wielding, Holder::SelfWielding, Holder::PartnerWielding),
    ];
    for (map, mine, theirs) in held {
        for (agent, objs) in map {
            let holder = match norm(agent) {
                a if a == me_name => mine,
                a if a == partner_name => theirs,
                a => return Err(format!("holder {a:?} is not an agent of the conversation")),
            };
            for o in objs {
                place(o, holder)?;
            }
        }
    }
    for rest in by_original.into_values().flatten() {
        placements.push(Placement {
            object_name: rest,
            holder: Holder::Room,
        });
    }
    Ok(SettingRecord {
        task_name: "light".into(),
        setting_name: room,
        setting_description: c.setting.description.clone(),
        self_agent: SelfAgent {
            name: me_name,
            persona: me.persona.clone(),
        },
        partner_agent: PartnerAgent { name: partner_name },
        objects,
        placements,
    })
}

fn nonempty(s: &Option<String>) -> Option<String> {
    s.as_deref()
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::to_string)
}

/// Raw turns before candidate sampling.
fn raw_turns(c: &LightConversation) -> Vec<Turn> {
    let mut out = Vec::new();
    for t in &c.turns {
        let speaker = norm(&t.character);
        for (kind, text) in [
            (TurnKind::Utterance, nonempty(&t.speech)),
            (TurnKind::Emote, nonempty(&t.emote)),
            (TurnKind::Action, nonempty(&t.action)),
        ] {
            if let Some(text) = text {
                out.push(Turn::new(speaker.clone(), kind, text));
            }
        }
    }
    out
}

/// Converts every conversation, reporting all bad records at once.
pub fn convert(raw: &str, options: ConvertOptions) -> Result<Vec<Episode>, HarnessError> {
    let records = parse_export(raw)?;
    let mut problems = Vec::new();
    let mut converted = Vec::new();
    for (line, c) in &records {
        let id = c.id.clone().unwrap_or_else(|| format!("light-{line}"));
        let problem = |message: String| RecordProblem {
            line: *line,
            episode: Some(id.clone()),
            message,
        };
        let Some(split) = parse_split(&c.split) else {
            problems.push(problem(format!("unknown split {:?}", c.split)));
            continue;
        };
        match setting_of(c) {
            Ok(setting) => converted.push(Episode {
                id,
                split,
                turns: raw_turns(c),
                setting,
            }),
            Err(m) => problems.push(problem(m)),
        }
    }
    if !problems.is_empty() {
        return Err(HarnessError::Schema(problems));
    }

    let mut pools: BTreeMap<TurnKind, BTreeSet<String>> = BTreeMap::new();
    pools.insert(TurnKind::Emote, DEFAULT_EMOTES.iter().map(|s| s.to_string()).collect());
    for t in converted.iter().flat_map(|e| &e.turns) {
        pools.entry(t.kind).or_default().insert(t.text.clone());
    }
    let pools: BTreeMap<TurnKind, Vec<String>> = pools.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    for ep in &mut converted {
        let me = ep.setting.self_name();
        for turn in ep.turns.iter_mut().filter(|t| t.speaker == me) {
            let pool = pools.get(&turn.kind).map(Vec::as_slice).unwrap_or_default();
            let mut cands: Vec<String> = pool
                .choose_multiple(&mut rng, options.distractors + 1)
                .filter(|t| **t != turn.text)
                .take(options.distractors)
                .cloned()
                .collect();
            let gold = rng.gen_range(0..=cands.len());
            cands.insert(gold, turn.text.clone());
            turn.candidates = Some(cands);
            turn.gold_index = Some(gold);
        }
    }
    Ok(converted)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE: &str = r#"{"split": "test_unseen", "setting": {"name": "Palace"},
        "agents": [{"name": "King"}, {"name": "servant"}],
        "objects": [{"name": "a crown", "tags": ["wearable"]}, {"name": "crown"}, {"name": "king"}],
        "carrying": {"king": ["crown"]},
        "turns": [{"character": "king", "speech": "Hello.", "action": "wear crown"},
                  {"character": "servant", "emote": "bow"}]}"#;

    #[test]
    fn names_flags_and_placements() {
        let eps = convert(ONE, ConvertOptions::default()).unwrap();
        let ep = &eps[0];
        assert_eq!(ep.id, "light-1");
        assert_eq!(ep.split, Split::UnseenTest);
        let names: Vec<&str> = ep.setting.objects.iter().map(|o| o.name.as_str()).collect();
        assert_eq!(names, ["crown", "crown 2", "king 2"]);
        assert!(ep.setting.objects[0].flags.contains(Flag::Wearable));
        assert_eq!(ep.setting.placements[0].holder, Holder::SelfCarrying);
        assert_eq!(ep.setting.placements[0].object_name, "crown");
        assert_eq!(ep.setting.placements.len(), 3);
        ep.validate(Default::default()).unwrap();
    }

    #[test]
    fn turns_expand_and_only_self_turns_get_candidates() {
        let ep = &convert(ONE, ConvertOptions::default()).unwrap()[0];
        let kinds: Vec<TurnKind> = ep.turns.iter().map(|t| t.kind).collect();
        assert_eq!(kinds, [TurnKind::Utterance, TurnKind::Action, TurnKind::Emote]);
        assert!(ep.turns[0].is_target() && ep.turns[1].is_target());
        assert!(ep.turns[2].candidates.is_none());
        // the pools hold one utterance and one action, so no distractors exist
        assert_eq!(ep.turns[0].candidates.as_ref().unwrap().len(), 1);
    }

    #[test]
    fn unknown_holder_is_reported() {
        let bad = ONE.replace(r#""carrying": {"king""#, r#""carrying": {"wizard""#);
        let e = convert(&bad, ConvertOptions::default()).unwrap_err();
        assert!(e.to_string().contains("wizard"), "{e}");
        assert_eq!(e.exit_code(), 1);
    }
}
