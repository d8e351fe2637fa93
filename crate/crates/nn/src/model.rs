//! The full ranking model and its per-episode forward pass.
//!
//! Per target turn: encode the current belief graph (R-GCN over entity
//! features), attend between graph nodes and dialogue-history tokens, and
//! score every candidate against the fused context. Between turns the graph
//! state advances according to [`GraphMode`].

use mindstate_core::{
    effects, forced_effects, parse_action, parse_setting, ApplyMode, Candidate, DiscreteGraph, EntityId, Episode,
    GraphConfig, GraphDelta, SettingRecord, Turn, TurnKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::belief::{BeliefConfig, BeliefUpdater, DenseBeliefGraph, UpdaterState};
use crate::biattend::Biattend;
use crate::error::{mismatch, NnError};
use crate::matrix::Matrix;
use crate::params::{ParamId, ParamStore};
use crate::rgcn::{discrete_adjacency, message_layout, Rgcn, RgcnConfig};
use crate::tape::{softmax, Tape, Var};
use crate::text::{tokenize, TextConfig, TextEncoder};

pub const SELF_MARKER: &str = "[self]";
pub const PARTNER_MARKER: &str = "[partner]";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphMode {
    /// Rule-based updates only; utterances leave the graph alone.
    Discrete,
    /// Learned updates only, for every turn kind.
    Continuous,
    /// Actions update the discrete graph and clamp the dense one; utterances
    /// run the learned update.
    #[default]
    Hybrid,
}

impl GraphMode {
    pub fn parse(s: &str) -> Option<GraphMode> {
        match s {
            "discrete" => Some(GraphMode::Discrete),
            "continuous" => Some(GraphMode::Continuous),
            "hybrid" => Some(GraphMode::Hybrid),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GraphMode::Discrete => "discrete",
            GraphMode::Continuous => "continuous",
            GraphMode::Hybrid => "hybrid",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub text: TextConfig,
    pub rgcn: RgcnConfig,
    pub belief: BeliefConfig,
    pub scorer_hidden: usize,
    /// Ablation switch: without graph features the attention sees zero nodes.
    pub use_graph: bool,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            text: TextConfig::default(),
            rgcn: RgcnConfig::default(),
            belief: BeliefConfig::default(),
            scorer_hidden: 128,
            use_graph: true,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn dim(&self) -> usize {
        self.text.dim
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let d = self.text.dim;
        if self.rgcn.dim != d {
            return Err(mismatch("rgcn dim", d, self.rgcn.dim));
        }
        if self.belief.input != d {
            return Err(mismatch("belief input", d, self.belief.input));
        }
        if self.belief.relations != self.rgcn.relations {
            return Err(mismatch("belief relations", self.rgcn.relations, self.belief.relations));
        }
        Ok(())
    }
}

/// MLP over `[context ; candidate]`, written as `tanh(C·W_c + X·W_x + b₁)·w₂ + b₂`
/// so the context projection is shared by all candidates, plus a bilinear
/// term `X·(C·W_b)ᵀ` that lets a candidate match the context directly.
#[derive(Clone, Debug)]
pub struct Scorer {
    w_c: ParamId,
    w_x: ParamId,
    b1: ParamId,
    w2: ParamId,
    b2: ParamId,
    w_b: ParamId,
}

impl Scorer {
    fn new<R: Rng>(store: &mut ParamStore, context: usize, cand: usize, hidden: usize, rng: &mut R) -> Self {
        // Xavier over the concatenated input width
        let bound = (6.0 / (context + cand + hidden) as f64).sqrt();
        Scorer {
            w_c: store.uniform("scorer.w_c", context, hidden, bound, rng),
            w_x: store.uniform("scorer.w_x", cand, hidden, bound, rng),
            b1: store.zeros("scorer.b1", 1, hidden),
            w2: store.xavier("scorer.w2", hidden, 1, rng),
            b2: store.zeros("scorer.b2", 1, 1),
            w_b: store.uniform("scorer.w_b", context, cand, (6.0 / (context + cand) as f64).sqrt(), rng),
        }
    }

    /// `context`: `1 × 4d`; `candidates`: `K × d`. Returns `1 × K` logits.
    pub fn logits_on(&self, tape: &mut Tape, context: Var, candidates: Var) -> Var {
        let (wc, wx, b1, w2, b2) = (
            tape.param(self.w_c),
            tape.param(self.w_x),
            tape.param(self.b1),
            tape.param(self.w2),
            tape.param(self.b2),
        );
        let c = tape.matmul(context, wc);
        let c = tape.add(c, b1);
        let x = tape.matmul(candidates, wx);
        let h = tape.add_broadcast(x, c);
        let h = tape.tanh(h);
        let s = tape.matmul(h, w2);
        let s = tape.add_broadcast(s, b2);
        let wb = tape.param(self.w_b);
        let cb = tape.matmul(context, wb);
        let cb = tape.transpose(cb);
        let bilinear = tape.matmul(candidates, cb);
        let s = tape.add(s, bilinear);
        tape.transpose(s)
    }
}

#[derive(Clone, Debug)]
pub struct Model {
    pub config: ModelConfig,
    pub store: ParamStore,
    pub text: TextEncoder,
    pub rgcn: Rgcn,
    pub attend: Biattend,
    pub belief: BeliefUpdater,
    pub scorer: Scorer,
}

/// Per-run switches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub mode: GraphMode,
    /// Strict: an infeasible action turn is an error. Lenient: it is forced.
    pub apply: ApplyMode,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            mode: GraphMode::Hybrid,
            apply: ApplyMode::Lenient,
        }
    }
}

/// One scored target turn.
pub struct TargetVars {
    pub turn: usize,
    pub logits: Var,
    pub context: Var,
    pub gold: Option<usize>,
    /// Discrete graph before the turn.
    pub graph: DiscreteGraph,
    pub actor: EntityId,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TurnPrediction {
    pub turn: usize,
    pub kind: TurnKind,
    pub speaker: String,
    pub candidates: Vec<Candidate>,
    pub probs: Vec<f64>,
    pub gold: Option<usize>,
    pub graph: DiscreteGraph,
    pub actor: EntityId,
    pub context: Vec<f64>,
}

/// Discrete graph, dense graph and recurrent state between turns.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridState {
    pub discrete: DiscreteGraph,
    pub dense: DenseBeliefGraph,
    pub updater: UpdaterState,
}

/// What advancing one turn did to the discrete graph.
#[derive(Clone, Debug, PartialEq)]
pub enum TurnEffect {
    Unchanged,
    Applied(GraphDelta),
    /// Lenient mode: the action was infeasible and was forced (or skipped
    /// when no forced delta exists).
    Forced {
        reason: String,
        delta: Option<GraphDelta>,
    },
}

struct Tracker<'m> {
    model: &'m Model,
    options: RunOptions,
    discrete: DiscreteGraph,
    dense: Var,
    hidden: Var,
    features: Var,
    encoded: Option<(Var, Var)>,
}

impl<'m> Tracker<'m> {
    fn n(&self) -> usize {
        self.discrete.len()
    }

    fn graph_input(&self, tape: &mut Tape) -> Var {
        let n = self.n();
        let r = self.model.config.rgcn.relations;
        let big = self.model.config.belief.nodes;
        let discrete = || message_layout(&discrete_adjacency(&self.discrete, n, r));
        match self.options.mode {
            GraphMode::Discrete => tape.constant(discrete()),
            GraphMode::Continuous | GraphMode::Hybrid => {
                // message [r][i·n + j] ← dense[r][j][i]
                let mut idx = Vec::with_capacity(r * n * n);
                for rel in 0..r {
                    for i in 0..n {
                        for j in 0..n {
                            idx.push(rel * big * big + j * big + i);
                        }
                    }
                }
                let m = tape.gather(self.dense, idx, r, n * n);
                if self.options.mode == GraphMode::Hybrid {
                    let overlay: Vec<(usize, f64)> = self
                        .discrete
                        .edges()
                        .filter(|e| e.relation.index() < r)
                        .map(|e| (crate::rgcn::message_index(n, e.relation.index(), e.src, e.dst), 1.0))
                        .collect();
                    tape.overwrite(m, &overlay)
                } else {
                    m
                }
            }
        }
    }

    fn encode(&mut self, tape: &mut Tape) -> Result<(Var, Var), NnError> {
        if let Some(e) = self.encoded {
            return Ok(e);
        }
        let e = if self.model.config.use_graph {
            let m = self.graph_input(tape);
            self.model.rgcn.encode_on(tape, m, self.features)?
        } else {
            let d = self.model.config.dim();
            (
                tape.constant(Matrix::zeros(self.n(), d)),
                tape.constant(Matrix::zeros(1, d)),
            )
        };
        self.encoded = Some(e);
        Ok(e)
    }

    fn learned_update(&mut self, tape: &mut Tape, text: &str) -> Result<(), NnError> {
        if !self.model.config.use_graph {
            return Ok(());
        }
        let (_, pooled) = self.encode(tape)?;
        let h_graph = self.model.belief.summarize_on(tape, pooled);
        let h_obs = self.model.text.pooled_on(tape, &[tokenize(text)]);
        let (h, g) = self.model.belief.step_on(tape, h_graph, h_obs, self.hidden)?;
        self.hidden = h;
        self.dense = g;
        self.encoded = None;
        Ok(())
    }

    fn apply_action(&mut self, tape: &mut Tape, turn: &Turn) -> Result<TurnEffect, NnError> {
        let actor = self
            .discrete
            .find(&turn.speaker)
            .ok_or_else(|| NnError::UnknownSpeaker(turn.speaker.clone()))?;
        let parsed = parse_action(actor, &turn.text, &self.discrete);
        let exact = parsed
            .as_ref()
            .map_err(Clone::clone)
            .and_then(|a| effects(a, &self.discrete));
        let (delta, effect) = match (exact, self.options.apply) {
            (Ok(delta), _) => (Some(delta.clone()), TurnEffect::Applied(delta)),
            (Err(e), ApplyMode::Strict) => return Err(e.into()),
            (Err(e), ApplyMode::Lenient) => {
                let forced = parsed.ok().and_then(|a| forced_effects(&a, &self.discrete).ok());
                let forced = forced.filter(|d| self.discrete.apply_delta(d, ApplyMode::Strict).is_ok());
                (
                    forced.clone(),
                    TurnEffect::Forced {
                        reason: e.to_string(),
                        delta: forced,
                    },
                )
            }
        };
        if let Some(delta) = &delta {
            self.discrete = self.discrete.apply_delta(delta, ApplyMode::Strict)?;
            self.encoded = None;
            if self.options.mode == GraphMode::Hybrid && self.model.config.use_graph {
                let c = self.model.config.belief;
                let clamps = DenseBeliefGraph::zeros(c.relations, c.nodes).clamp_entries(delta);
                if !clamps.is_empty() {
                    self.dense = tape.overwrite(self.dense, &clamps);
                }
            }
        }
        Ok(effect)
    }

    fn advance(&mut self, tape: &mut Tape, turn: &Turn) -> Result<TurnEffect, NnError> {
        match (turn.kind, self.options.mode) {
            (TurnKind::Emote, _) => Ok(TurnEffect::Unchanged),
            (TurnKind::Utterance, GraphMode::Discrete) => Ok(TurnEffect::Unchanged),
            (TurnKind::Utterance, _) => {
                self.learned_update(tape, &turn.text)?;
                Ok(TurnEffect::Unchanged)
            }
            (TurnKind::Action, GraphMode::Continuous) => {
                let effect = self.apply_action(tape, turn)?;
                self.learned_update(tape, &turn.text)?;
                Ok(effect)
            }
            (TurnKind::Action, _) => self.apply_action(tape, turn),
        }
    }
}

fn history_tokens(turns: &[Turn]) -> Vec<String> {
    let mut out = Vec::new();
    for t in turns {
        out.extend(tokenize(&t.speaker));
        out.extend(tokenize(&t.text));
    }
    out
}

impl Model {
    pub fn new(config: ModelConfig) -> Result<Self, NnError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let d = config.dim();
        let text = TextEncoder::new(&mut store, "text", config.text, &mut rng);
        let rgcn = Rgcn::new(&mut store, "rgcn", config.rgcn, &mut rng);
        let attend = Biattend::new(&mut store, "attend", d, &mut rng);
        let belief = BeliefUpdater::new(&mut store, "belief", config.belief, &mut rng);
        let scorer = Scorer::new(&mut store, 4 * d, d, config.scorer_hidden, &mut rng);
        Ok(Model {
            config,
            store,
            text,
            rgcn,
            attend,
            belief,
            scorer,
        })
    }

    pub fn graph_config(&self) -> GraphConfig {
        GraphConfig::default()
    }

    /// Token lists for each entity: name, attached text, and a perspective
    /// marker on the two agents.
    pub fn entity_texts(graph: &DiscreteGraph, self_name: &str, partner_name: &str) -> Vec<Vec<String>> {
        graph
            .entities()
            .iter()
            .map(|e| {
                let mut toks = tokenize(&e.name);
                toks.extend(tokenize(&e.text));
                if e.name == self_name {
                    toks.push(SELF_MARKER.into());
                } else if e.name == partner_name {
                    toks.push(PARTNER_MARKER.into());
                }
                toks
            })
            .collect()
    }

    fn tracker<'m>(
        &'m self,
        tape: &mut Tape,
        state: &HybridState,
        setting_names: (&str, &str),
        options: RunOptions,
    ) -> Result<Tracker<'m>, NnError> {
        let c = self.config.belief;
        let n = state.discrete.len();
        if self.config.use_graph && options.mode != GraphMode::Discrete && n > c.nodes {
            return Err(mismatch("entity slots", format!("<= {}", c.nodes), n));
        }
        if (state.dense.relations(), state.dense.nodes()) != (c.relations, c.nodes) {
            return Err(mismatch(
                "dense graph",
                format!("{}x{}", c.relations, c.nodes),
                format!("{}x{}", state.dense.relations(), state.dense.nodes()),
            ));
        }
        let texts = Self::entity_texts(&state.discrete, setting_names.0, setting_names.1);
        let features = if self.config.use_graph {
            self.text.pooled_on(tape, &texts)
        } else {
            tape.constant(Matrix::zeros(n, self.config.dim()))
        };
        let dense = tape.constant(Matrix::row_vector(state.dense.as_slice().to_vec()));
        let hidden = tape.constant(Matrix::row_vector(state.updater.hidden.clone()));
        Ok(Tracker {
            model: self,
            options,
            discrete: state.discrete.clone(),
            dense,
            hidden,
            features,
            encoded: None,
        })
    }

    pub fn initial_state(&self, setting: &SettingRecord) -> Result<HybridState, NnError> {
        let discrete = parse_setting(setting, self.graph_config())?;
        let c = self.config.belief;
        Ok(HybridState {
            dense: DenseBeliefGraph::from_discrete(&discrete, c.relations, c.nodes),
            discrete,
            updater: UpdaterState::zeros(&c),
        })
    }

    /// Advances the mental state by one turn.
    pub fn hybrid_step(
        &self,
        state: &HybridState,
        turn: &Turn,
        self_name: &str,
        partner_name: &str,
        options: RunOptions,
    ) -> Result<(HybridState, TurnEffect), NnError> {
        let mut tape = Tape::new(&self.store);
        let mut tr = self.tracker(&mut tape, state, (self_name, partner_name), options)?;
        let effect = tr.advance(&mut tape, turn)?;
        let c = self.config.belief;
        let next = HybridState {
            discrete: tr.discrete.clone(),
            dense: DenseBeliefGraph::from_flat(c.relations, c.nodes, tape.value(tr.dense).as_slice().to_vec())?,
            updater: UpdaterState {
                hidden: tape.value(tr.hidden).as_slice().to_vec(),
            },
        };
        Ok((next, effect))
    }

    /// Runs an episode on `tape`, scoring every turn that carries candidates.
    pub fn run_on(&self, tape: &mut Tape, episode: &Episode, options: RunOptions) -> Result<Vec<TargetVars>, NnError> {
        let state = self.initial_state(&episode.setting)?;
        let (self_name, partner_name) = (episode.setting.self_name(), episode.setting.partner_name());
        let mut tr = self.tracker(tape, &state, (&self_name, &partner_name), options)?;
        let prompt = tokenize(&self_name);
        let mut out = Vec::new();
        for (i, turn) in episode.turns.iter().enumerate() {
            if let Some(cands) = turn.candidates.as_ref().filter(|c| !c.is_empty()) {
                let (nodes, _) = tr.encode(tape)?;
                let mut toks = history_tokens(&episode.turns[..i]);
                toks.extend(prompt.iter().cloned());
                let tokens = self.text.tokens_on(tape, &toks);
                let att = self.attend.attend_on(tape, nodes, tokens)?;
                let texts: Vec<Vec<String>> = cands.iter().map(|c| tokenize(c)).collect();
                let x = self.text.pooled_on(tape, &texts);
                let logits = self.scorer.logits_on(tape, att.fused, x);
                let actor = tr
                    .discrete
                    .find(&turn.speaker)
                    .ok_or_else(|| NnError::UnknownSpeaker(turn.speaker.clone()))?;
                out.push(TargetVars {
                    turn: i,
                    logits,
                    context: att.fused,
                    gold: turn.gold_index,
                    graph: tr.discrete.clone(),
                    actor,
                });
            }
            tr.advance(tape, turn)?;
        }
        Ok(out)
    }

    /// Mean cross-entropy of the gold candidate over the episode's target
    /// turns, or `None` if there are none.
    pub fn episode_loss_on(
        &self,
        tape: &mut Tape,
        episode: &Episode,
        options: RunOptions,
    ) -> Result<Option<Var>, NnError> {
        let targets = self.run_on(tape, episode, options)?;
        let losses: Vec<Var> = targets
            .iter()
            .filter_map(|t| t.gold.map(|g| tape.cross_entropy(t.logits, g)))
            .collect();
        if losses.is_empty() {
            return Ok(None);
        }
        let stacked = tape.concat_cols(&losses);
        let total = tape.sum_all(stacked);
        Ok(Some(tape.scale(total, 1.0 / losses.len() as f64)))
    }

    pub fn predict(&self, episode: &Episode, options: RunOptions) -> Result<Vec<TurnPrediction>, NnError> {
        let mut tape = Tape::new(&self.store);
        let targets = self.run_on(&mut tape, episode, options)?;
        Ok(targets
            .into_iter()
            .map(|t| {
                let turn = &episode.turns[t.turn];
                TurnPrediction {
                    turn: t.turn,
                    kind: turn.kind,
                    speaker: turn.speaker.clone(),
                    candidates: turn.typed_candidates().unwrap_or_default(),
                    probs: softmax(tape.value(t.logits).as_slice()),
                    gold: t.gold,
                    graph: t.graph,
                    actor: t.actor,
                    context: tape.value(t.context).as_slice().to_vec(),
                }
            })
            .collect())
    }

    /// Softmax over `MLP([context ; text_encode(candidate)])`.
    pub fn score_candidates(&self, context: &[f64], candidates: &[Candidate]) -> Result<Vec<f64>, NnError> {
        if candidates.is_empty() {
            return Err(NnError::EmptyCandidateList);
        }
        let want = 4 * self.config.dim();
        if context.len() != want {
            return Err(mismatch("context", want, context.len()));
        }
        let mut tape = Tape::new(&self.store);
        let c = tape.constant(Matrix::row_vector(context.to_vec()));
        let texts: Vec<Vec<String>> = candidates.iter().map(|c| tokenize(&c.text)).collect();
        let x = self.text.pooled_on(&mut tape, &texts);
        let logits = self.scorer.logits_on(&mut tape, c, x);
        Ok(softmax(tape.value(logits).as_slice()))
    }
}
