//! Neural side of the mental-state engine: a small reverse-mode autodiff,
//! text and graph encoders, the continuous belief updater and the candidate
//! ranker.
//!
//! All arithmetic is `f64`. Parameters live in a [`ParamStore`]; a forward
//! pass records onto a [`Tape`] that borrows the store, and
//! [`Tape::backward`] fills a [`Gradients`] buffer.

pub mod belief;
pub mod biattend;
pub mod checkpoint;
pub mod error;
pub mod gradcheck;
pub mod matrix;
pub mod model;
pub mod params;
pub mod ranker;
pub mod rgcn;
pub mod tape;
pub mod text;
pub mod train;

pub use belief::{BeliefConfig, BeliefUpdater, DenseBeliefGraph, UpdaterState};
pub use biattend::{Attention, Biattend, FUSED_LAYOUT};
pub use checkpoint::Checkpoint;
pub use error::NnError;
pub use gradcheck::{grad_check, GradCheckReport};
pub use matrix::Matrix;
pub use model::{GraphMode, HybridState, Model, ModelConfig, RunOptions, TurnEffect, TurnPrediction};
pub use params::{Adam, AdamConfig, Gradients, ParamId, ParamStore};
pub use ranker::{select, RankResult, DEFAULT_TOP_K};
pub use rgcn::{NodeEmbeddings, Rgcn, RgcnConfig};
pub use tape::{Tape, Var};
pub use text::{TextConfig, TextEncoder, TextEncoding};
pub use train::{train, MetricLine, Metrics, TrainConfig, TrainReport};
