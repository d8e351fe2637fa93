//! Masked top-k selection over candidate probabilities.

use mindstate_core::ActionMask;

use crate::error::{mismatch, NnError};

pub const DEFAULT_TOP_K: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct RankResult {
    /// Probabilities renormalized over unmasked candidates; masked ones are 0.
    pub scores: Vec<f64>,
    pub mask: ActionMask,
    /// Indices of the k best unmasked candidates, best first.
    pub topk: Vec<usize>,
    pub chosen: usize,
}

/// Indices of the `k` largest scores; ties go to the lower index.
pub fn top_k(scores: &[f64], eligible: &[bool], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).filter(|&i| eligible[i]).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Zeroes masked probabilities, renormalizes the rest, and takes the top `k`
/// (at least one). The choice defaults to the best candidate.
pub fn select(scores: &[f64], mask: ActionMask, k: usize) -> Result<RankResult, NnError> {
    if scores.is_empty() {
        return Err(NnError::EmptyCandidateList);
    }
    if mask.feasible.len() != scores.len() {
        return Err(mismatch("mask", scores.len(), mask.feasible.len()));
    }
    let open = mask.feasible.iter().filter(|f| **f).count();
    if open == 0 {
        return Err(NnError::AllMasked);
    }
    let kept: Vec<f64> = scores
        .iter()
        .zip(&mask.feasible)
        .map(|(&s, &f)| if f { s } else { 0.0 })
        .collect();
    let total: f64 = kept.iter().sum();
    let renormalized: Vec<f64> = if total > 0.0 && total.is_finite() {
        kept.iter().map(|s| s / total).collect()
    } else {
        mask.feasible
            .iter()
            .map(|&f| if f { 1.0 / open as f64 } else { 0.0 })
            .collect()
    };
    let topk = top_k(&renormalized, &mask.feasible, k.max(1));
    Ok(RankResult {
        chosen: topk[0],
        scores: renormalized,
        mask,
        topk,
    })
}
