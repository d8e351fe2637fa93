//! Mental-state graph engine for LIGHT-style text adventures.
//!
//! - [`graph`]: the discrete typed graph and its ADD/DEL delta algebra
//! - [`snapshot`]: canonical JSON persistence
//! - [`setting`]: setting records and the initial graph
//! - [`actions`]: template actions, preconditions, effects and masking
//! - [`episode`]: turns, episodes and dataset splits
//! - [`gen`]: random valid worlds for testing and synthetic data

pub mod actions;
pub mod episode;
pub mod gen;
pub mod graph;
pub mod setting;
pub mod snapshot;
pub mod synth;

pub use actions::{
    effects, enumerate_feasible, forced_effects, mask_candidates, parse_action, preconditions, ActionError, ActionMask,
    Feasibility, MaskMode, ParsedAction, Verb,
};
pub use episode::{Candidate, CandidateKind, Episode, EpisodeError, Split, Turn, TurnKind};
pub use graph::{
    ApplyMode, AtomicOp, DiscreteGraph, Edge, Entity, EntityId, EntityKind, Flag, Flags, GraphBuilder, GraphConfig,
    GraphDelta, GraphError, Invariant, OpKind, Relation,
};
pub use setting::{parse_setting, parse_setting_text, render_setting_text, SettingError, SettingRecord};
pub use synth::{generate_synthetic, SynthConfig};

/// Inverse of a delta: reversed op order with ADD and DEL swapped.
pub fn invert_delta(delta: &GraphDelta) -> GraphDelta {
    delta.invert()
}
