#![allow(dead_code)]

use mindstate_core::{generate_synthetic, Episode, SynthConfig};
use mindstate_nn::{BeliefConfig, ModelConfig, RgcnConfig, TextConfig};

/// A width-`d` model small enough for finite differences.
pub fn small_config(d: usize, seed: u64) -> ModelConfig {
    ModelConfig {
        text: TextConfig {
            dim: d,
            hidden: d,
            ..TextConfig::default()
        },
        rgcn: RgcnConfig {
            dim: d,
            layers: 2,
            ..RgcnConfig::default()
        },
        belief: BeliefConfig {
            input: d,
            hidden: d,
            mlp_hidden: d,
            decoder_hidden: d,
            nodes: 16,
            ..BeliefConfig::default()
        },
        scorer_hidden: 2 * d,
        use_graph: true,
        seed,
    }
}

pub fn episodes(n: usize, seed: u64) -> Vec<Episode> {
    generate_synthetic(&SynthConfig {
        n_episodes: n,
        seed,
        candidates: 6,
        ..SynthConfig::default()
    })
}
