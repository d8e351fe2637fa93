use mindstate_nn::RankResult;
use serde::{Deserialize, Serialize};

use crate::query::{UtilityError, UtilityQuery, UtilityScorer};

/// Outcome of the utility stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reranked {
    /// Candidate index, always one of the ranker's top three.
    pub chosen: usize,
    /// False when the scorer failed and the ranker's best was kept.
    pub reranked: bool,
    /// Utility per top-k position, when the scorer answered.
    pub utility: Option<Vec<f64>>,
    pub fallback_reason: Option<String>,
}

impl Reranked {
    fn fallback(result: &RankResult, reason: String) -> Self {
        Reranked {
            chosen: result.topk[0],
            reranked: false,
            utility: None,
            fallback_reason: Some(reason),
        }
    }
}

/// Picks the top-k position with the highest utility; ties go to the higher
/// ranker score, then to the lower candidate index.
pub fn argmax_utility(topk: &[usize], utility: &[f64], ranker_scores: &[f64]) -> usize {
    let mut best = 0;
    for p in 1..topk.len() {
        let (a, b) = (topk[p], topk[best]);
        let better = utility[p]
            .total_cmp(&utility[best])
            .then(ranker_scores[a].total_cmp(&ranker_scores[b]))
            .then(b.cmp(&a))
            .is_gt();
        if better {
            best = p;
        }
    }
    topk[best]
}

/// Re-ranks the first three of `result.topk` by utility. `texts` holds every
/// candidate's text, indexed like the ranker's scores. Any scorer failure
/// keeps `topk[0]`.
pub fn rerank_top3<S: UtilityScorer + ?Sized>(
    result: &RankResult,
    texts: &[String],
    context: &str,
    scorer: &S,
) -> Reranked {
    let top: Vec<usize> = result.topk.iter().copied().take(3).collect();
    if top.is_empty() {
        // unreachable through select(), which always yields one candidate
        return Reranked {
            chosen: 0,
            reranked: false,
            utility: None,
            fallback_reason: Some("empty top-k".into()),
        };
    }
    let Some(cands) = top
        .iter()
        .map(|&i| texts.get(i).cloned())
        .collect::<Option<Vec<String>>>()
    else {
        return Reranked::fallback(result, "candidate text missing".into());
    };
    let scored = UtilityQuery::padded(context, &cands).and_then(|q| scorer.score(&q));
    match scored {
        Ok(scores) if scores.iter().all(|s| !s.is_nan()) => {
            let utility = scores[..top.len()].to_vec();
            Reranked {
                chosen: argmax_utility(&top, &utility, &result.scores),
                reranked: true,
                utility: Some(utility),
                fallback_reason: None,
            }
        }
        Ok(_) => Reranked::fallback(result, UtilityError::MalformedResponse("NaN score".into()).to_string()),
        Err(e) => Reranked::fallback(result, e.to_string()),
    }
}
