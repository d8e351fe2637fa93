//! TOML configuration. Every key is optional:
//!
//! ```toml
//! [graph]
//! max_entities = 64
//! relation_slots = 8
//!
//! [model]
//! dim = 64
//! layers = 6
//! bases = 3
//! nodes = 32
//!
//! [ranker]
//! k = 3
//! mask = "strict"
//!
//! [utility]
//! scorer = "heuristic"   # heuristic | remote | off
//! endpoint = "http://127.0.0.1:8080"
//! timeout_ms = 2000
//!
//! [train]
//! epochs = 10
//! lr = 0.002
//! ```

use std::path::Path;

use mindstate_core::{GraphConfig, MaskMode};
use mindstate_nn::{AdamConfig, BeliefConfig, GraphMode, ModelConfig, RgcnConfig, TextConfig, TrainConfig};
use mindstate_utility::{RemoteConfig, RephraseConfig};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub graph: GraphConfig,
    pub model: ModelSection,
    pub ranker: RankerSection,
    pub utility: UtilitySection,
    pub rephrase: RephraseSection,
    pub train: TrainSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub dim: usize,
    pub text_hidden: usize,
    pub buckets: usize,
    pub max_tokens: usize,
    pub layers: usize,
    pub bases: usize,
    /// Dense belief-graph node slots.
    pub nodes: usize,
    pub updater_hidden: usize,
    pub scorer_hidden: usize,
    pub use_graph: bool,
    pub graph_mode: GraphMode,
    pub seed: u64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let m = ModelConfig::default();
        ModelSection {
            dim: m.text.dim,
            text_hidden: m.text.hidden,
            buckets: m.text.buckets,
            max_tokens: m.text.max_tokens,
            layers: m.rgcn.layers,
            bases: m.rgcn.bases,
            nodes: m.belief.nodes,
            updater_hidden: m.belief.hidden,
            scorer_hidden: m.scorer_hidden,
            use_graph: m.use_graph,
            graph_mode: GraphMode::Discrete,
            seed: m.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankerSection {
    pub k: usize,
    pub mask: MaskMode,
}

impl Default for RankerSection {
    fn default() -> Self {
        RankerSection {
            k: mindstate_nn::DEFAULT_TOP_K,
            mask: MaskMode::Strict,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    #[default]
    Heuristic,
    Remote,
    Off,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UtilitySection {
    pub scorer: ScorerKind,
    pub endpoint: String,
    pub timeout_ms: u64,
    pub attempts: u32,
    pub backoff_ms: u64,
    /// Optional lexicon file for the heuristic scorer.
    pub lexicon: Option<String>,
}

impl Default for UtilitySection {
    fn default() -> Self {
        let r = RemoteConfig::default();
        UtilitySection {
            scorer: ScorerKind::Heuristic,
            endpoint: r.endpoint,
            timeout_ms: r.timeout_ms,
            attempts: r.attempts,
            backoff_ms: r.backoff_ms,
            lexicon: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RephraseSection {
    pub third_person: bool,
    pub max_turns: usize,
    pub include_persona: bool,
}

impl Default for RephraseSection {
    fn default() -> Self {
        let r = RephraseConfig::default();
        RephraseSection {
            third_person: r.third_person,
            max_turns: r.max_turns,
            include_persona: r.include_persona,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub clip: f64,
    pub weight_decay: f64,
    pub final_lr_fraction: f64,
    pub target_action_recall: Option<f64>,
    pub seed: u64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            epochs: t.epochs,
            batch_size: t.batch_size,
            lr: t.adam.lr,
            clip: t.adam.clip,
            weight_decay: t.adam.weight_decay,
            final_lr_fraction: t.final_lr_fraction,
            target_action_recall: t.target_action_recall,
            seed: t.seed,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, HarnessError> {
        let raw = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Config::parse(&raw)
    }

    pub fn parse(raw: &str) -> Result<Config, HarnessError> {
        let config: Config = toml::from_str(raw).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.graph.relation_slots < mindstate_core::Relation::ALL.len() {
            return bad("graph.relation_slots is below the number of relations");
        }
        if self.model.dim == 0 || self.model.layers == 0 || self.model.bases == 0 {
            return bad("model.dim, model.layers and model.bases must be positive");
        }
        if self.model.nodes == 0 || self.model.nodes > self.graph.max_entities {
            return bad("model.nodes must be in 1..=graph.max_entities");
        }
        if self.ranker.k == 0 {
            return bad("ranker.k must be positive");
        }
        if !(self.train.lr >= 0.0 && self.train.lr.is_finite()) {
            return bad("train.lr must be a finite non-negative number");
        }
        Ok(())
    }

    pub fn model_config(&self) -> ModelConfig {
        let m = &self.model;
        let relations = mindstate_core::Relation::ALL.len();
        ModelConfig {
            text: TextConfig {
                buckets: m.buckets,
                dim: m.dim,
                hidden: m.text_hidden,
                max_tokens: m.max_tokens,
                ..TextConfig::default()
            },
            rgcn: RgcnConfig {
                layers: m.layers,
                dim: m.dim,
                bases: m.bases,
                relations,
            },
            belief: BeliefConfig {
                input: m.dim,
                hidden: m.updater_hidden,
                mlp_hidden: m.updater_hidden,
                decoder_hidden: m.updater_hidden,
                relations,
                nodes: m.nodes,
            },
            scorer_hidden: m.scorer_hidden,
            use_graph: m.use_graph,
            seed: m.seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            epochs: t.epochs,
            batch_size: t.batch_size,
            adam: AdamConfig {
                lr: t.lr,
                clip: t.clip,
                weight_decay: t.weight_decay,
                ..AdamConfig::default()
            },
            seed: t.seed,
            target_action_recall: t.target_action_recall,
            final_lr_fraction: t.final_lr_fraction,
        }
    }

    pub fn remote_config(&self) -> RemoteConfig {
        let u = &self.utility;
        RemoteConfig {
            endpoint: u.endpoint.clone(),
            timeout_ms: u.timeout_ms,
            attempts: u.attempts,
            backoff_ms: u.backoff_ms,
        }
    }

    pub fn rephrase_config(&self) -> RephraseConfig {
        let r = &self.rephrase;
        RephraseConfig {
            third_person: r.third_person,
            max_turns: r.max_turns,
            include_persona: r.include_persona,
        }
    }
}
