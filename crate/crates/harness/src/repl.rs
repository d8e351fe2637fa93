//! Interactive play as the self agent.
//!
//! Commands: `say <text>`, `do <action>`, `emote <name>`, `graph`, `mask`,
//! `undo`, `help`, `quit`. Actions are checked against the preconditions;
//! accepted actions print the applied ops and `undo` applies the inverse.

use mindstate_core::episode::{default_emotes, emote_name};
use mindstate_core::{
    effects, enumerate_feasible, invert_delta, parse_action, parse_setting, preconditions, ApplyMode, DiscreteGraph,
    EntityId, GraphConfig, GraphDelta, SettingRecord, Turn, TurnKind,
};

use crate::error::HarnessError;

const HELP: &str = "commands: say <text> | do <action> | emote <name> | graph | mask | undo | quit";

/// Result of one input line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reply {
    pub text: String,
    /// The line was rejected and left no trace in the transcript.
    pub rejected: bool,
    pub quit: bool,
}

impl Reply {
    fn ok(text: impl Into<String>) -> Self {
        Reply {
            text: text.into(),
            rejected: false,
            quit: false,
        }
    }

    fn rejected(text: impl Into<String>) -> Self {
        Reply {
            text: text.into(),
            rejected: true,
            quit: false,
        }
    }
}

pub struct Session {
    pub setting: SettingRecord,
    graph: DiscreteGraph,
    me: EntityId,
    emotes: Vec<String>,
    /// Applied action deltas, newest last, with the turn index they produced.
    undo_stack: Vec<(GraphDelta, usize)>,
    pub turns: Vec<Turn>,
    /// Accepted command lines, replayable with [`Session::replay_transcript`].
    pub transcript: Vec<String>,
}

impl Session {
    pub fn new(setting: SettingRecord, config: GraphConfig) -> Result<Session, HarnessError> {
        let graph = parse_setting(&setting, config)?;
        let me = graph
            .find(&setting.self_name())
            .expect("the setting adds the self agent");
        Ok(Session {
            setting,
            graph,
            me,
            emotes: default_emotes(),
            undo_stack: Vec::new(),
            turns: Vec::new(),
            transcript: Vec::new(),
        })
    }

    /// Replays accepted lines; rejected lines are an error.
    pub fn replay_transcript(
        setting: SettingRecord,
        config: GraphConfig,
        lines: &[String],
    ) -> Result<Session, HarnessError> {
        let mut s = Session::new(setting, config)?;
        for (i, line) in lines.iter().enumerate() {
            let r = s.execute(line)?;
            if r.rejected {
                return Err(HarnessError::ReplayAborted {
                    episode: "transcript".into(),
                    turn: i,
                    reason: r.text,
                });
            }
        }
        Ok(s)
    }

    pub fn graph(&self) -> &DiscreteGraph {
        &self.graph
    }

    /// Feasible actions of the self agent, rendered and sorted.
    pub fn feasible(&self) -> Vec<String> {
        let mut out: Vec<String> = enumerate_feasible(self.me, &self.graph)
            .iter()
            .map(|a| a.render(&self.graph))
            .collect();
        out.sort();
        out
    }

    fn diff(&self, delta: &GraphDelta, graph: &DiscreteGraph) -> String {
        if delta.is_empty() {
            return "(no change)".into();
        }
        delta
            .ops
            .iter()
            .map(|op| graph.describe_op(op))
            .collect::<Vec<_>>()
            .join("\n")
    }

    fn record(&mut self, line: &str, kind: TurnKind, text: String) {
        self.turns.push(Turn::new(self.setting.self_name(), kind, text));
        self.transcript.push(line.trim().to_string());
    }

    pub fn execute(&mut self, line: &str) -> Result<Reply, HarnessError> {
        let line = line.trim();
        let (cmd, arg) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let arg = arg.trim();
        let me = self.setting.self_name();
        match cmd {
            "" => Ok(Reply::ok("")),
            "help" => Ok(Reply::ok(HELP)),
            "quit" | "exit" => Ok(Reply {
                quit: true,
                ..Reply::ok("bye")
            }),
            "say" if !arg.is_empty() => {
                self.record(line, TurnKind::Utterance, arg.to_string());
                Ok(Reply::ok(format!("{me} says: {arg}")))
            }
            "emote" if !arg.is_empty() => match emote_name(arg, &self.emotes) {
                Some(name) => {
                    let name = name.to_lowercase();
                    self.record(line, TurnKind::Emote, name.clone());
                    Ok(Reply::ok(format!("{me}: *{name}*")))
                }
                None => Ok(Reply::rejected(format!("rejected: unknown emote {arg:?}"))),
            },
            "do" if !arg.is_empty() => {
                let action = match parse_action(self.me, arg, &self.graph) {
                    Ok(a) => a,
                    Err(e) => return Ok(Reply::rejected(format!("rejected: {e}"))),
                };
                if let Some(reason) = preconditions(&action, &self.graph).reason() {
                    return Ok(Reply::rejected(format!("rejected: {reason}")));
                }
                let delta = effects(&action, &self.graph)?;
                let next = self.graph.apply_delta(&delta, ApplyMode::Strict)?;
                let shown = self.diff(&delta, &self.graph);
                self.graph = next;
                self.record(line, TurnKind::Action, action.render(&self.graph));
                self.undo_stack.push((delta, self.turns.len() - 1));
                Ok(Reply::ok(shown))
            }
            "graph" => Ok(Reply::ok(self.graph.describe_edges().join("\n"))),
            "mask" => Ok(Reply::ok(self.feasible().join("\n"))),
            "undo" => {
                let Some((delta, turn)) = self.undo_stack.pop() else {
                    return Ok(Reply::rejected("rejected: nothing to undo"));
                };
                let inverse = invert_delta(&delta);
                let next = self.graph.apply_delta(&inverse, ApplyMode::Strict)?;
                let shown = self.diff(&inverse, &self.graph);
                self.graph = next;
                self.turns.remove(turn);
                self.transcript.push("undo".into());
                Ok(Reply::ok(shown))
            }
            _ => Ok(Reply::rejected(format!("rejected: unknown command {line:?}; {HELP}"))),
        }
    }
}
