//! Synthetic episodes with a known signal.
//!
//! Every self-agent action turn is a ranking target whose gold candidate acts
//! on an object the self agent is carrying at that turn. No distractor
//! mentions a carried object, and the carried objects are placed in the
//! setting (never mentioned in dialogue), so the signal lives in the graph.
//! With `handover` (the default) the self agent starts with one object and
//! the partner hands over the next one before each later target, so exactly
//! one object is carried at every target turn. Without it, all target objects
//! start carried and the partner's turns are random.
//! Distractors mix same-verb actions on other objects (infeasible), feasible
//! actions (get, steal, hug, hit), and actions borrowed from earlier episodes
//! (unresolvable here).

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::actions::{enumerate_feasible, ParsedAction, Verb};
use crate::episode::{Episode, Split, Turn, TurnKind, DEFAULT_EMOTES};
use crate::gen::{AGENT_NAMES, OBJECT_NAMES, ROOM_NAMES};
use crate::graph::{EntityId, Flag, Flags, GraphConfig, Relation};
use crate::setting::{parse_setting, Holder, ObjectSpec, PartnerAgent, Placement, SelfAgent, SettingRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_episodes: usize,
    pub seed: u64,
    /// Verbs the gold action may use.
    pub verbs: Vec<Verb>,
    pub n_objects: usize,
    /// Candidates per target turn, gold included.
    pub candidates: usize,
    pub split: Split,
    /// Self-agent action turns per episode.
    pub targets: usize,
    pub handover: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_episodes: 100,
            seed: 0,
            verbs: vec![Verb::Drop, Verb::Give, Verb::Put, Verb::Eat, Verb::Drink, Verb::Wear],
            n_objects: 4,
            candidates: 20,
            split: Split::Train,
            targets: 2,
            handover: true,
        }
    }
}

const CHATTER: [&str; 12] = [
    "Good day to you.",
    "What brings you here?",
    "The weather has been strange lately.",
    "Have you heard the news from the village?",
    "I have been waiting for you.",
    "Be careful around here.",
    "It is quiet today.",
    "Tell me about your travels.",
    "I do not trust strangers.",
    "Shall we talk for a while?",
    "There is much to do.",
    "You look tired, friend.",
];

const ADJECTIVES: [&str; 8] = ["old", "small", "heavy", "shiny", "plain", "worn", "fine", "dusty"];

fn flags_for<R: Rng>(rng: &mut R) -> Flags {
    let mut f = Flags::empty();
    for flag in [Flag::Wearable, Flag::Food, Flag::Drink, Flag::Container, Flag::Surface] {
        if rng.gen_bool(0.3) {
            f.insert(flag);
        }
    }
    f
}

/// Objects `0..carried` start with the self agent, `carried..carried + given`
/// with the partner; the rest are spread over the room and the partner.
fn setting<R: Rng>(rng: &mut R, n_objects: usize, carried: usize, given: usize) -> SettingRecord {
    let mut agents = AGENT_NAMES.to_vec();
    agents.shuffle(rng);
    let (me, other) = (agents[0], agents[1]);
    let mut names = OBJECT_NAMES.to_vec();
    names.shuffle(rng);
    let objects: Vec<ObjectSpec> = names[..n_objects]
        .iter()
        .map(|n| ObjectSpec {
            name: n.to_string(),
            description: format!("a {} {n}", ADJECTIVES.choose(rng).expect("non-empty")),
            flags: flags_for(rng),
        })
        .collect();
    let placements = objects
        .iter()
        .enumerate()
        .map(|(i, o)| Placement {
            object_name: o.name.clone(),
            holder: if i < carried {
                Holder::SelfCarrying
            } else if i < carried + given {
                Holder::PartnerCarrying
            } else if rng.gen_bool(0.7) {
                Holder::Room
            } else {
                Holder::PartnerCarrying
            },
        })
        .collect();
    let room = ROOM_NAMES.choose(rng).expect("non-empty");
    SettingRecord {
        task_name: "synthetic".into(),
        setting_name: room.to_string(),
        setting_description: format!("You are in the {room}."),
        self_agent: SelfAgent {
            name: me.into(),
            persona: format!("I am the {me}."),
        },
        partner_agent: PartnerAgent { name: other.into() },
        objects,
        placements,
    }
}

fn mentions(action: &ParsedAction, ids: &BTreeSet<EntityId>) -> bool {
    ids.contains(&action.arg1) || action.arg2.is_some_and(|b| ids.contains(&b))
}

/// Template actions on `x` that would be gold-shaped if `x` were carried.
fn object_actions(x: EntityId, actor: EntityId, partner: EntityId, receptacles: &[EntityId]) -> Vec<ParsedAction> {
    let mut out = vec![
        ParsedAction::new(actor, Verb::Drop, x, None),
        ParsedAction::new(actor, Verb::Give, x, Some(partner)),
        ParsedAction::new(actor, Verb::Eat, x, None),
        ParsedAction::new(actor, Verb::Drink, x, None),
        ParsedAction::new(actor, Verb::Wear, x, None),
    ];
    out.extend(
        receptacles
            .iter()
            .filter(|y| **y != x)
            .map(|&y| ParsedAction::new(actor, Verb::Put, x, Some(y))),
    );
    out
}

/// Deterministic synthetic dataset.
pub fn generate_synthetic(config: &SynthConfig) -> Vec<Episode> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut borrowed: Vec<String> = Vec::new();
    let mut out = Vec::with_capacity(config.n_episodes);
    let n_objects = config.n_objects.max(config.targets + 1);
    while out.len() < config.n_episodes {
        if let Some(ep) = episode(&mut rng, config, n_objects, &mut borrowed, out.len()) {
            out.push(ep);
        }
    }
    out
}

fn episode<R: Rng>(
    rng: &mut R,
    config: &SynthConfig,
    n_objects: usize,
    borrowed: &mut Vec<String>,
    index: usize,
) -> Option<Episode> {
    let (carried, given) = match (config.handover, config.targets) {
        (true, t) if t > 0 => (1, t - 1),
        (_, t) => (t, 0),
    };
    let record = setting(rng, n_objects, carried, given);
    let mut graph = parse_setting(&record, GraphConfig::default()).ok()?;
    let me = graph.find(&record.self_name())?;
    let partner = graph.find(&record.partner_name())?;
    let mut turns = Vec::new();
    let mut golds = Vec::new();
    for t in 0..config.targets {
        if config.handover && t > 0 {
            let obj = graph.find(&record.objects[t].name)?;
            let give = ParsedAction::new(partner, Verb::Give, obj, Some(me));
            turns.push(Turn::new(
                graph.name(partner).to_string(),
                TurnKind::Action,
                give.render(&graph),
            ));
        } else {
            turns.push(partner_turn(rng, &graph, partner, me, t == 0));
        }
        if let Some(TurnKind::Action) = turns.last().map(|x: &Turn| x.kind) {
            let last = turns.last().expect("just pushed");
            let a = crate::actions::parse_action(partner, &last.text, &graph).ok()?;
            graph = graph
                .apply_delta(
                    &crate::actions::effects(&a, &graph).ok()?,
                    crate::graph::ApplyMode::Strict,
                )
                .ok()?;
        }
        let carried: BTreeSet<EntityId> = graph.targets(Relation::Carrying, me).collect();
        let feasible = enumerate_feasible(me, &graph);
        let gold_options: Vec<&ParsedAction> = feasible
            .iter()
            .filter(|a| config.verbs.contains(&a.verb) && carried.contains(&a.arg1))
            .filter(|a| a.arg2.is_none_or(|b| !carried.contains(&b)))
            .collect();
        let gold = **gold_options.choose(rng)?;
        let gold_text = gold.render(&graph);

        let receptacles: Vec<EntityId> = graph
            .ids_of_kind(crate::graph::EntityKind::Object)
            .filter(|y| {
                let f = graph.entity(*y).flags;
                f.contains(Flag::Container) || f.contains(Flag::Surface)
            })
            .collect();
        let others: Vec<EntityId> = graph
            .ids_of_kind(crate::graph::EntityKind::Object)
            .filter(|x| !carried.contains(x))
            .collect();
        let mut same_verb = Vec::new();
        let mut rest = Vec::new();
        for &x in &others {
            for a in object_actions(x, me, partner, &receptacles) {
                if mentions(&a, &carried) {
                    continue;
                }
                if a.verb == gold.verb {
                    same_verb.push(a.render(&graph));
                } else {
                    rest.push(a.render(&graph));
                }
            }
        }
        rest.extend(
            feasible
                .iter()
                .filter(|a| !mentions(a, &carried))
                .map(|a| a.render(&graph)),
        );
        let names: BTreeSet<&str> = graph.entities().iter().map(|e| e.name.as_str()).collect();
        let foreign: Vec<String> = borrowed
            .iter()
            .filter(|b| !b.split_whitespace().any(|w| names.contains(w)))
            .cloned()
            .collect();

        let mut distractors: Vec<String> = Vec::new();
        let want = config.candidates.saturating_sub(1);
        same_verb.shuffle(rng);
        rest.shuffle(rng);
        for c in same_verb.into_iter().chain(rest) {
            if distractors.len() >= want.saturating_sub(want / 4) {
                break;
            }
            if c != gold_text && !distractors.contains(&c) {
                distractors.push(c);
            }
        }
        let mut foreign = foreign;
        foreign.shuffle(rng);
        for c in foreign {
            if distractors.len() >= want {
                break;
            }
            if !distractors.contains(&c) {
                distractors.push(c);
            }
        }
        while distractors.len() < want {
            let obj = OBJECT_NAMES.choose(rng).expect("non-empty");
            let verb = [Verb::Drop, Verb::Eat, Verb::Wear, Verb::Get]
                .choose(rng)
                .expect("non-empty");
            let c = format!("{verb} {obj}");
            if !names.contains(obj) && !distractors.contains(&c) {
                distractors.push(c);
            }
        }
        let gold_index = rng.gen_range(0..=distractors.len());
        let mut candidates = distractors;
        candidates.insert(gold_index, gold_text.clone());
        turns.push(Turn {
            speaker: record.self_name(),
            kind: TurnKind::Action,
            text: gold_text.clone(),
            candidates: Some(candidates),
            gold_index: Some(gold_index),
        });
        golds.push(gold_text);
        graph = graph
            .apply_delta(
                &crate::actions::effects(&gold, &graph).ok()?,
                crate::graph::ApplyMode::Strict,
            )
            .ok()?;
    }
    borrowed.extend(golds);
    let keep = borrowed.len().saturating_sub(64);
    borrowed.drain(..keep);
    Some(Episode {
        id: format!("synth-{}-{index}", config.seed),
        split: config.split,
        setting: record,
        turns,
    })
}

/// A partner utterance, emote, or feasible action that leaves the self
/// agent's possessions alone. The first turn is always an utterance.
fn partner_turn<R: Rng>(
    rng: &mut R,
    graph: &crate::graph::DiscreteGraph,
    partner: EntityId,
    me: EntityId,
    first: bool,
) -> Turn {
    let speaker = graph.name(partner).to_string();
    let roll = if first { 0 } else { rng.gen_range(0..3) };
    if roll == 1 {
        let e = DEFAULT_EMOTES.choose(rng).expect("non-empty");
        return Turn::new(speaker, TurnKind::Emote, *e);
    }
    if roll == 2 {
        let options: Vec<ParsedAction> = enumerate_feasible(partner, graph)
            .into_iter()
            .filter(|a| matches!(a.verb, Verb::Get | Verb::Drop | Verb::Hug | Verb::Wear | Verb::Remove))
            .filter(|a| a.arg1 != me || matches!(a.verb, Verb::Hug))
            .collect();
        if let Some(a) = options.choose(rng) {
            return Turn::new(speaker, TurnKind::Action, a.render(graph));
        }
    }
    Turn::new(speaker, TurnKind::Utterance, *CHATTER.choose(rng).expect("non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let c = SynthConfig {
            n_episodes: 10,
            ..Default::default()
        };
        let a = serde_json::to_string(&generate_synthetic(&c)).unwrap();
        let b = serde_json::to_string(&generate_synthetic(&c)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn only_gold_mentions_a_carried_object() {
        use crate::actions::parse_action;
        use crate::graph::ApplyMode;
        let c = SynthConfig {
            n_episodes: 200,
            ..Default::default()
        };
        for ep in generate_synthetic(&c) {
            let mut g = parse_setting(&ep.setting, GraphConfig::default()).unwrap();
            for t in &ep.turns {
                let actor = g.find(&t.speaker).unwrap();
                if let (Some(cands), Some(gold)) = (&t.candidates, t.gold_index) {
                    let carried: BTreeSet<EntityId> = g.targets(Relation::Carrying, actor).collect();
                    for (i, cand) in cands.iter().enumerate() {
                        let hit = parse_action(actor, cand, &g).is_ok_and(|a| mentions(&a, &carried));
                        assert_eq!(hit, i == gold, "{} / {cand}", ep.id);
                    }
                }
                if t.kind == TurnKind::Action {
                    let a = parse_action(actor, &t.text, &g).unwrap();
                    g = g
                        .apply_delta(&crate::actions::effects(&a, &g).unwrap(), ApplyMode::Strict)
                        .unwrap();
                }
            }
        }
    }

    #[test]
    fn handover_keeps_one_object_carried_per_target() {
        use crate::actions::parse_action;
        use crate::graph::ApplyMode;
        let c = SynthConfig {
            n_episodes: 100,
            targets: 3,
            ..Default::default()
        };
        for ep in generate_synthetic(&c) {
            let mut g = parse_setting(&ep.setting, GraphConfig::default()).unwrap();
            let me = g.find(&ep.setting.self_name()).unwrap();
            for t in &ep.turns {
                if t.is_target() {
                    assert_eq!(g.targets(Relation::Carrying, me).count(), 1, "{}", ep.id);
                }
                if t.kind == TurnKind::Action {
                    let actor = g.find(&t.speaker).unwrap();
                    let a = parse_action(actor, &t.text, &g).unwrap();
                    g = g
                        .apply_delta(&crate::actions::effects(&a, &g).unwrap(), ApplyMode::Strict)
                        .unwrap();
                }
            }
        }
    }

    #[test]
    fn without_handover_targets_start_carried() {
        let c = SynthConfig {
            n_episodes: 20,
            handover: false,
            ..Default::default()
        };
        for ep in generate_synthetic(&c) {
            ep.validate(GraphConfig::default()).unwrap();
            let carried = ep
                .setting
                .placements
                .iter()
                .filter(|p| p.holder == Holder::SelfCarrying)
                .count();
            assert_eq!(carried, 2);
        }
    }

    #[test]
    fn episodes_validate() {
        let c = SynthConfig {
            n_episodes: 50,
            ..Default::default()
        };
        for ep in generate_synthetic(&c) {
            ep.validate(GraphConfig::default()).unwrap();
            for t in ep.turns.iter().filter(|t| t.is_target()) {
                assert_eq!(t.candidates.as_ref().unwrap().len(), 20);
            }
        }
    }
}
