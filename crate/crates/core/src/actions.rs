//! Template actions: parsing, preconditions, effects and the action mask.
//!
//! Verb table (precondition → effects):
//!
//! | verb            | precondition                                          | effects |
//! |-----------------|-------------------------------------------------------|---------|
//! | get X           | contains(room, X)                                     | DEL(room,X,contains) ADD(actor,X,carrying) |
//! | drop X          | carrying(actor, X)                                    | DEL(actor,X,carrying) ADD(room,X,contains) |
//! | put X in/on Y   | carrying(actor, X), Y container/surface, Y reachable  | DEL(actor,X,carrying) ADD(Y,X,contains) |
//! | give X to B     | carrying(actor, X), B co-located agent                | DEL(actor,X,carrying) ADD(B,X,carrying) |
//! | steal X from B  | carrying(B, X), B co-located agent                    | DEL(B,X,carrying) ADD(actor,X,carrying) |
//! | wear X          | carrying(actor, X), X wearable                        | DEL(actor,X,carrying) ADD(actor,X,wearing) |
//! | remove X        | wearing(actor, X) or wielding(actor, X)               | DEL(that edge) ADD(actor,X,carrying) |
//! | eat X / drink X | carrying(actor, X), X food / drink                    | DEL(actor,X,carrying) ADD(sink,X,contains) |
//! | hug B / hit B   | B co-located agent                                    | none |

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::episode::{Candidate, CandidateKind};
use crate::graph::{AtomicOp, DiscreteGraph, EntityId, EntityKind, Flag, GraphDelta, Relation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verb {
    Get,
    Drop,
    Put,
    Give,
    Steal,
    Wear,
    Remove,
    Eat,
    Drink,
    Hug,
    Hit,
}

impl Verb {
    pub const ALL: [Verb; 11] = [
        Verb::Get,
        Verb::Drop,
        Verb::Put,
        Verb::Give,
        Verb::Steal,
        Verb::Wear,
        Verb::Remove,
        Verb::Eat,
        Verb::Drink,
        Verb::Hug,
        Verb::Hit,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Verb::Get => "get",
            Verb::Drop => "drop",
            Verb::Put => "put",
            Verb::Give => "give",
            Verb::Steal => "steal",
            Verb::Wear => "wear",
            Verb::Remove => "remove",
            Verb::Eat => "eat",
            Verb::Drink => "drink",
            Verb::Hug => "hug",
            Verb::Hit => "hit",
        }
    }

    pub fn parse(s: &str) -> Option<Verb> {
        Verb::ALL.into_iter().find(|v| v.as_str() == s)
    }

    pub fn arity(self) -> usize {
        match self {
            Verb::Put | Verb::Give | Verb::Steal => 2,
            _ => 1,
        }
    }

    /// Separator words accepted between the two arguments.
    fn separators(self) -> &'static [&'static str] {
        match self {
            Verb::Put => &["in", "on", "into", "onto"],
            Verb::Give => &["to"],
            Verb::Steal => &["from"],
            _ => &[],
        }
    }
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParsedAction {
    pub actor: EntityId,
    pub verb: Verb,
    pub arg1: EntityId,
    pub arg2: Option<EntityId>,
}

impl ParsedAction {
    pub fn new(actor: EntityId, verb: Verb, arg1: EntityId, arg2: Option<EntityId>) -> Self {
        ParsedAction {
            actor,
            verb,
            arg1,
            arg2,
        }
    }

    /// Template text, e.g. `give scepter to servant`.
    pub fn render(&self, graph: &DiscreteGraph) -> String {
        let a = graph.name(self.arg1);
        match (self.verb, self.arg2) {
            (Verb::Put, Some(y)) => {
                let prep = if graph.entity(y).flags.contains(Flag::Container) {
                    "in"
                } else {
                    "on"
                };
                format!("put {a} {prep} {}", graph.name(y))
            }
            (Verb::Give, Some(b)) => format!("give {a} to {}", graph.name(b)),
            (Verb::Steal, Some(b)) => format!("steal {a} from {}", graph.name(b)),
            (verb, _) => format!("{verb} {a}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ActionError {
    #[error("unknown verb {0:?}")]
    UnknownVerb(String),
    #[error("cannot resolve {span:?} to an entity")]
    UnresolvedEntity { span: String },
    #[error("{verb} takes {expected} argument(s)")]
    ArityMismatch { verb: Verb, expected: usize },
    #[error("infeasible action: {reason}")]
    InfeasibleAction { reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Feasibility {
    Feasible,
    Infeasible(String),
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible)
    }

    pub fn reason(&self) -> Option<&str> {
        match self {
            Feasibility::Feasible => None,
            Feasibility::Infeasible(r) => Some(r),
        }
    }
}

const ARTICLES: [&str; 4] = ["a", "an", "the", "some"];

/// Entity kinds that action arguments may refer to, highest priority first.
const RESOLVABLE: [EntityKind; 3] = [EntityKind::Object, EntityKind::Agent, EntityKind::Room];

fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| {
            t.trim_matches(|c: char| matches!(c, '.' | ',' | '!' | '?' | ';' | '"'))
                .to_lowercase()
        })
        .filter(|t| !t.is_empty())
        .collect()
}

/// Resolves `tokens` (exactly) to an entity name, ignoring one leading article.
fn resolve_span(tokens: &[String], graph: &DiscreteGraph) -> Option<EntityId> {
    let tokens = match tokens.first() {
        Some(t) if tokens.len() > 1 && ARTICLES.contains(&t.as_str()) => &tokens[1..],
        _ => tokens,
    };
    if tokens.is_empty() {
        return None;
    }
    let span = tokens.join(" ");
    let id = graph.find(&span)?;
    RESOLVABLE.contains(&graph.kind(id)).then_some(id)
}

/// Parses a template action for `actor`.
///
/// Multiword names are resolved by longest match: for two-argument verbs the
/// split that gives the longest first argument wins.
pub fn parse_action(actor: EntityId, text: &str, graph: &DiscreteGraph) -> Result<ParsedAction, ActionError> {
    let tokens = tokenize(text);
    let (head, rest) = tokens
        .split_first()
        .ok_or_else(|| ActionError::UnknownVerb(String::new()))?;
    let verb = Verb::parse(head).ok_or_else(|| ActionError::UnknownVerb(head.clone()))?;
    if rest.is_empty() {
        return Err(ActionError::ArityMismatch {
            verb,
            expected: verb.arity(),
        });
    }
    if verb.arity() == 1 {
        if let Some(arg) = resolve_span(rest, graph) {
            return Ok(ParsedAction::new(actor, verb, arg, None));
        }
        // `get crown from table` style: a resolvable prefix followed by a preposition.
        let has_extra_arg = (1..rest.len()).any(|split| {
            resolve_span(&rest[..split], graph).is_some()
                && ["to", "from", "in", "on", "into", "onto", "with"].contains(&rest[split].as_str())
        });
        if has_extra_arg {
            return Err(ActionError::ArityMismatch { verb, expected: 1 });
        }
        return Err(ActionError::UnresolvedEntity { span: rest.join(" ") });
    }

    let separators = verb.separators();
    let mut saw_separator = false;
    let mut first_unresolved = None;
    for split in (1..rest.len()).rev() {
        if !separators.contains(&rest[split].as_str()) {
            continue;
        }
        saw_separator = true;
        let (left, right) = (&rest[..split], &rest[split + 1..]);
        match (resolve_span(left, graph), resolve_span(right, graph)) {
            (Some(a), Some(b)) => return Ok(ParsedAction::new(actor, verb, a, Some(b))),
            (None, _) if first_unresolved.is_none() => first_unresolved = Some(left.join(" ")),
            (_, None) if first_unresolved.is_none() => first_unresolved = Some(right.join(" ")),
            _ => {}
        }
    }
    if !saw_separator {
        return Err(ActionError::ArityMismatch { verb, expected: 2 });
    }
    Err(ActionError::UnresolvedEntity {
        span: first_unresolved.unwrap_or_else(|| rest.join(" ")),
    })
}

fn co_located(graph: &DiscreteGraph, a: EntityId, b: EntityId) -> bool {
    match graph.room() {
        Some(room) => graph.has_edge(Relation::Contains, room, a) && graph.has_edge(Relation::Contains, room, b),
        None => false,
    }
}

fn in_range(graph: &DiscreteGraph, id: EntityId) -> bool {
    id.0 < graph.len()
}

/// Checks the verb table's precondition, returning the first failed condition.
pub fn preconditions(action: &ParsedAction, graph: &DiscreteGraph) -> Feasibility {
    use Feasibility::*;
    let fail = |r: &str| Infeasible(r.to_string());
    let ParsedAction {
        actor,
        verb,
        arg1,
        arg2,
    } = *action;
    if !in_range(graph, actor) || !in_range(graph, arg1) || arg2.is_some_and(|a| !in_range(graph, a)) {
        return fail("unknown entity");
    }
    if arg2.is_some() != (verb.arity() == 2) {
        return fail("wrong number of arguments");
    }
    if graph.kind(actor) != EntityKind::Agent {
        return fail("actor is not an agent");
    }
    let carrying = |x: EntityId| graph.has_edge(Relation::Carrying, actor, x);
    let needs_agent = |b: EntityId| -> Option<Feasibility> {
        if graph.kind(b) != EntityKind::Agent {
            return Some(fail("not an agent"));
        }
        if b == actor {
            return Some(fail("same agent"));
        }
        if !co_located(graph, actor, b) {
            return Some(fail("not co-located"));
        }
        None
    };
    match verb {
        Verb::Get => {
            if graph.kind(arg1) != EntityKind::Object {
                return fail("not an object");
            }
            match graph.room() {
                Some(room) if graph.has_edge(Relation::Contains, room, arg1) => Feasible,
                _ => fail("not in room"),
            }
        }
        Verb::Drop => {
            if !carrying(arg1) {
                return fail("not carrying");
            }
            if graph.room().is_none() {
                return fail("no room");
            }
            Feasible
        }
        Verb::Put => {
            let target = arg2.expect("arity checked");
            if !carrying(arg1) {
                return fail("not carrying");
            }
            if target == arg1 {
                return fail("same object");
            }
            let e = graph.entity(target);
            if e.kind != EntityKind::Object || !(e.flags.contains(Flag::Container) || e.flags.contains(Flag::Surface)) {
                return fail("not a container or surface");
            }
            let in_room = graph
                .room()
                .is_some_and(|room| graph.has_edge(Relation::Contains, room, target));
            if !(in_room || carrying(target)) {
                return fail("not reachable");
            }
            Feasible
        }
        Verb::Give => {
            let b = arg2.expect("arity checked");
            if !carrying(arg1) {
                return fail("not carrying");
            }
            needs_agent(b).unwrap_or(Feasible)
        }
        Verb::Steal => {
            let b = arg2.expect("arity checked");
            if let Some(f) = needs_agent(b) {
                return f;
            }
            if !graph.has_edge(Relation::Carrying, b, arg1) {
                return fail("victim not carrying");
            }
            Feasible
        }
        Verb::Wear => {
            if !carrying(arg1) {
                return fail("not carrying");
            }
            if !graph.entity(arg1).flags.contains(Flag::Wearable) {
                return fail("not wearable");
            }
            Feasible
        }
        Verb::Remove => {
            if graph.has_edge(Relation::Wearing, actor, arg1) || graph.has_edge(Relation::Wielding, actor, arg1) {
                Feasible
            } else {
                fail("not wearing or wielding")
            }
        }
        Verb::Eat | Verb::Drink => {
            if !carrying(arg1) {
                return fail("not carrying");
            }
            let (flag, reason) = if verb == Verb::Eat {
                (Flag::Food, "not food")
            } else {
                (Flag::Drink, "not drink")
            };
            if !graph.entity(arg1).flags.contains(flag) {
                return fail(reason);
            }
            if graph.sink().is_none() {
                return fail("no sink");
            }
            Feasible
        }
        Verb::Hug | Verb::Hit => needs_agent(arg1).unwrap_or(Feasible),
    }
}

/// The verb table's delta for a feasible action.
pub fn effects(action: &ParsedAction, graph: &DiscreteGraph) -> Result<GraphDelta, ActionError> {
    if let Feasibility::Infeasible(reason) = preconditions(action, graph) {
        return Err(ActionError::InfeasibleAction { reason });
    }
    let ParsedAction {
        actor,
        verb,
        arg1: x,
        arg2,
    } = *action;
    let room = graph.room();
    let ops = match verb {
        Verb::Get => vec![
            AtomicOp::del(room.expect("checked"), x, Relation::Contains),
            AtomicOp::add(actor, x, Relation::Carrying),
        ],
        Verb::Drop => vec![
            AtomicOp::del(actor, x, Relation::Carrying),
            AtomicOp::add(room.expect("checked"), x, Relation::Contains),
        ],
        Verb::Put => vec![
            AtomicOp::del(actor, x, Relation::Carrying),
            AtomicOp::add(arg2.expect("checked"), x, Relation::Contains),
        ],
        Verb::Give => vec![
            AtomicOp::del(actor, x, Relation::Carrying),
            AtomicOp::add(arg2.expect("checked"), x, Relation::Carrying),
        ],
        Verb::Steal => vec![
            AtomicOp::del(arg2.expect("checked"), x, Relation::Carrying),
            AtomicOp::add(actor, x, Relation::Carrying),
        ],
        Verb::Wear => vec![
            AtomicOp::del(actor, x, Relation::Carrying),
            AtomicOp::add(actor, x, Relation::Wearing),
        ],
        Verb::Remove => {
            let rel = if graph.has_edge(Relation::Wearing, actor, x) {
                Relation::Wearing
            } else {
                Relation::Wielding
            };
            vec![
                AtomicOp::del(actor, x, rel),
                AtomicOp::add(actor, x, Relation::Carrying),
            ]
        }
        Verb::Eat | Verb::Drink => vec![
            AtomicOp::del(actor, x, Relation::Carrying),
            AtomicOp::add(graph.sink().expect("checked"), x, Relation::Contains),
        ],
        Verb::Hug | Verb::Hit => vec![],
    };
    Ok(GraphDelta::new(ops))
}

/// The verb table's destination edge applied regardless of preconditions: the
/// object's current holder edges are deleted first, so the delta always
/// applies strictly and keeps holder uniqueness. Used by lenient replay.
pub fn forced_effects(action: &ParsedAction, graph: &DiscreteGraph) -> Result<GraphDelta, ActionError> {
    let ParsedAction {
        actor,
        verb,
        arg1: x,
        arg2,
    } = *action;
    let missing = |reason: &str| ActionError::InfeasibleAction { reason: reason.into() };
    let dest = match verb {
        Verb::Get | Verb::Steal => Some((actor, Relation::Carrying)),
        Verb::Drop => Some((graph.room().ok_or_else(|| missing("no room"))?, Relation::Contains)),
        Verb::Put => Some((arg2.ok_or_else(|| missing("no target"))?, Relation::Contains)),
        Verb::Give => Some((arg2.ok_or_else(|| missing("no target"))?, Relation::Carrying)),
        Verb::Wear => Some((actor, Relation::Wearing)),
        Verb::Remove => Some((actor, Relation::Carrying)),
        Verb::Eat | Verb::Drink => Some((graph.sink().ok_or_else(|| missing("no sink"))?, Relation::Contains)),
        Verb::Hug | Verb::Hit => None,
    };
    let Some((holder, relation)) = dest else {
        return Ok(GraphDelta::default());
    };
    if graph.kind(x) != EntityKind::Object {
        return Err(missing("not an object"));
    }
    let mut ops: Vec<AtomicOp> = graph
        .holders(x)
        .into_iter()
        .map(|(rel, src)| AtomicOp::del(src, x, rel))
        .collect();
    ops.push(AtomicOp::add(holder, x, relation));
    // already in place: nothing to do
    if ops.len() == 2 && ops[0].src == holder && ops[0].relation == relation {
        ops.clear();
    }
    Ok(GraphDelta::new(ops))
}

/// Every feasible action for `actor`, generated from the graph's edges.
pub fn enumerate_feasible(actor: EntityId, graph: &DiscreteGraph) -> BTreeSet<ParsedAction> {
    let mut out = BTreeSet::new();
    if !in_range(graph, actor) || graph.kind(actor) != EntityKind::Agent {
        return out;
    }
    let act = |verb, a, b| ParsedAction::new(actor, verb, a, b);
    let room = graph.room();
    let objects: Vec<EntityId> = graph.ids_of_kind(EntityKind::Object).collect();
    let partners: Vec<EntityId> = graph
        .ids_of_kind(EntityKind::Agent)
        .filter(|b| *b != actor && co_located(graph, actor, *b))
        .collect();
    let carried: Vec<EntityId> = graph.targets(Relation::Carrying, actor).collect();

    if let Some(room) = room {
        for &x in &objects {
            if graph.has_edge(Relation::Contains, room, x) {
                out.insert(act(Verb::Get, x, None));
            }
        }
    }
    let receptacles: Vec<EntityId> = objects
        .iter()
        .copied()
        .filter(|y| {
            let f = graph.entity(*y).flags;
            (f.contains(Flag::Container) || f.contains(Flag::Surface))
                && (room.is_some_and(|r| graph.has_edge(Relation::Contains, r, *y))
                    || graph.has_edge(Relation::Carrying, actor, *y))
        })
        .collect();
    for &x in &carried {
        let flags = graph.entity(x).flags;
        if room.is_some() {
            out.insert(act(Verb::Drop, x, None));
        }
        if flags.contains(Flag::Wearable) {
            out.insert(act(Verb::Wear, x, None));
        }
        if graph.sink().is_some() {
            if flags.contains(Flag::Food) {
                out.insert(act(Verb::Eat, x, None));
            }
            if flags.contains(Flag::Drink) {
                out.insert(act(Verb::Drink, x, None));
            }
        }
        for &y in receptacles.iter().filter(|y| **y != x) {
            out.insert(act(Verb::Put, x, Some(y)));
        }
        for &b in &partners {
            out.insert(act(Verb::Give, x, Some(b)));
        }
    }
    for rel in [Relation::Wearing, Relation::Wielding] {
        for x in graph.targets(rel, actor) {
            out.insert(act(Verb::Remove, x, None));
        }
    }
    for &b in &partners {
        for x in graph.targets(Relation::Carrying, b) {
            out.insert(act(Verb::Steal, x, Some(b)));
        }
        out.insert(act(Verb::Hug, b, None));
        out.insert(act(Verb::Hit, b, None));
    }
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskMode {
    /// Unparseable action candidates are infeasible.
    #[default]
    Strict,
    /// Unparseable action candidates pass.
    Lenient,
}

/// Per-candidate feasibility aligned to a candidate list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionMask {
    pub feasible: Vec<bool>,
    /// Failure reason for each masked candidate.
    pub reasons: Vec<Option<String>>,
    /// The actor's full feasible action set.
    pub feasible_actions: BTreeSet<ParsedAction>,
}

impl ActionMask {
    pub fn all_open(n: usize) -> Self {
        ActionMask {
            feasible: vec![true; n],
            reasons: vec![None; n],
            feasible_actions: BTreeSet::new(),
        }
    }

    pub fn masked_count(&self) -> usize {
        self.feasible.iter().filter(|f| !**f).count()
    }
}

/// Marks each action candidate feasible iff it parses and its preconditions
/// hold. Utterances and emotes always pass.
pub fn mask_candidates(candidates: &[Candidate], actor: EntityId, graph: &DiscreteGraph, mode: MaskMode) -> ActionMask {
    let mut feasible = Vec::with_capacity(candidates.len());
    let mut reasons = Vec::with_capacity(candidates.len());
    for c in candidates {
        let verdict = match c.kind {
            CandidateKind::Utterance | CandidateKind::Emote => None,
            CandidateKind::Action => match parse_action(actor, &c.text, graph) {
                Ok(a) => preconditions(&a, graph).reason().map(str::to_string),
                Err(e) => match mode {
                    MaskMode::Strict => Some(e.to_string()),
                    MaskMode::Lenient => None,
                },
            },
        };
        feasible.push(verdict.is_none());
        reasons.push(verdict);
    }
    ActionMask {
        feasible,
        reasons,
        feasible_actions: enumerate_feasible(actor, graph),
    }
}
