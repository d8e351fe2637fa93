//! Operational shell around the mental-state engine.
//!
//! - [`ingest`]: JSONL episode loading with per-record validation
//! - [`replay`]: rule-based replay with per-turn snapshots
//! - [`generate`]: synthetic episode JSONL
//! - [`convert`]: LIGHT export to episode JSONL
//! - [`evaluate`]: recall@1 per task and flag combination
//! - [`repl`]: interactive play session
//! - [`config`]: TOML configuration

pub mod config;
pub mod convert;
pub mod error;
pub mod evaluate;
pub mod generate;
pub mod ingest;
pub mod repl;
pub mod replay;

pub use config::Config;
pub use error::{HarnessError, RecordProblem};
pub use evaluate::{evaluate, EvalFlags, EvalReport, EvalRow, EvalSettings, UtilityChoice};
pub use ingest::{ingest, read_episodes, Dataset, IngestReport};
pub use repl::Session;
pub use replay::{replay, ReplayMode, Trace, TurnRecord};
