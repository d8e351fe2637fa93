//! Utility re-ranking of the ranker's top three candidates.

pub mod heuristic;
pub mod query;
pub mod remote;
pub mod rephrase;
pub mod rerank;

pub use heuristic::{HeuristicScorer, Lexicon, LEXICON_VERSION};
pub use query::{ConstantScorer, UtilityError, UtilityQuery, UtilityScorer};
pub use remote::{RemoteConfig, RemoteScorer};
pub use rephrase::{rephrase_context, to_third_person, RephraseConfig};
pub use rerank::{argmax_utility, rerank_top3, Reranked};
