//! Rule-based replay of an episode through the discrete engine.

use mindstate_core::{
    effects, forced_effects, mask_candidates, parse_action, parse_setting, preconditions, ApplyMode, DiscreteGraph,
    Episode, GraphConfig, GraphDelta, MaskMode, TurnKind,
};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReplayMode {
    /// An infeasible gold action aborts the replay.
    #[default]
    Strict,
    /// An infeasible gold action is logged and force-applied.
    Lenient,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TurnRecord {
    pub turn: usize,
    pub speaker: String,
    pub kind: TurnKind,
    pub text: String,
    /// Action turns: whether the action was feasible before it was applied.
    pub gold_feasible: Option<bool>,
    /// Action turns with candidates: whether the mask leaves the gold open.
    pub mask_valid: Option<bool>,
    pub reason: Option<String>,
    /// Applied ops, e.g. `DEL(king, scepter, carrying)`.
    pub ops: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trace {
    pub episode: String,
    /// `snapshots[0]` is G₀; `snapshots[i + 1]` follows turn `i`.
    pub snapshots: Vec<String>,
    pub turns: Vec<TurnRecord>,
    /// Lenient-mode notes about forced actions.
    pub log: Vec<String>,
}

impl Trace {
    /// Share of gold-labelled action turns whose gold passed the mask.
    pub fn mask_valid_rate(&self) -> Option<f64> {
        let flags: Vec<bool> = self.turns.iter().filter_map(|t| t.mask_valid).collect();
        (!flags.is_empty()).then(|| flags.iter().filter(|f| **f).count() as f64 / flags.len() as f64)
    }

    pub fn final_graph(&self) -> Result<DiscreteGraph, HarnessError> {
        let last = self.snapshots.last().expect("G0 is always recorded");
        Ok(DiscreteGraph::restore(last.as_bytes())?)
    }
}

fn snapshot(g: &DiscreteGraph) -> String {
    String::from_utf8(g.snapshot()).expect("snapshots are UTF-8 JSON")
}

/// Replays the first `limit` turns (all when `None`).
pub fn replay(
    episode: &Episode,
    mode: ReplayMode,
    config: GraphConfig,
    limit: Option<usize>,
) -> Result<Trace, HarnessError> {
    let mut graph = parse_setting(&episode.setting, config)?;
    let mut trace = Trace {
        episode: episode.id.clone(),
        snapshots: vec![snapshot(&graph)],
        turns: Vec::new(),
        log: Vec::new(),
    };
    let n = limit.unwrap_or(episode.turns.len()).min(episode.turns.len());
    for (i, turn) in episode.turns[..n].iter().enumerate() {
        let mut record = TurnRecord {
            turn: i,
            speaker: turn.speaker.clone(),
            kind: turn.kind,
            text: turn.text.clone(),
            gold_feasible: None,
            mask_valid: None,
            reason: None,
            ops: Vec::new(),
        };
        if turn.kind == TurnKind::Action {
            let abort = |reason: String| HarnessError::ReplayAborted {
                episode: episode.id.clone(),
                turn: i,
                reason,
            };
            let actor = graph
                .find(&turn.speaker.to_lowercase())
                .ok_or_else(|| abort(format!("unknown speaker {:?}", turn.speaker)))?;
            if let (Some(cands), Some(g)) = (turn.typed_candidates(), turn.gold_index) {
                let mask = mask_candidates(&cands, actor, &graph, MaskMode::Strict);
                record.mask_valid = Some(mask.feasible[g]);
            }
            let (delta, reason): (Option<GraphDelta>, Option<String>) = match parse_action(actor, &turn.text, &graph) {
                Err(e) => (None, Some(e.to_string())),
                Ok(action) => match preconditions(&action, &graph).reason() {
                    None => (Some(effects(&action, &graph).map_err(|e| abort(e.to_string()))?), None),
                    Some(r) => (forced_effects(&action, &graph).ok(), Some(r.to_string())),
                },
            };
            record.gold_feasible = Some(reason.is_none());
            match (&reason, mode) {
                (Some(r), ReplayMode::Strict) => {
                    return Err(abort(format!("infeasible gold action {:?}: {r}", turn.text)))
                }
                (Some(r), ReplayMode::Lenient) => {
                    trace
                        .log
                        .push(format!("turn {i}: infeasible gold action {:?}: {r}", turn.text));
                }
                (None, _) => {}
            }
            record.reason = reason;
            if let Some(delta) = delta {
                let apply = if record.gold_feasible == Some(true) {
                    ApplyMode::Strict
                } else {
                    ApplyMode::Lenient
                };
                record.ops = delta.ops.iter().map(|op| graph.describe_op(op)).collect();
                graph = graph.apply_delta(&delta, apply)?;
            }
        }
        trace.snapshots.push(snapshot(&graph));
        trace.turns.push(record);
    }
    Ok(trace)
}
