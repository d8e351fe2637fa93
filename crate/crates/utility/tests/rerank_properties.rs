use mindstate_core::ActionMask;
use mindstate_nn::{select, RankResult};
use mindstate_utility::{rerank_top3, ConstantScorer, UtilityError, UtilityQuery, UtilityScorer};
use proptest::prelude::*;

/// Scores each candidate with a fixed per-text table lookup.
struct TableScorer(Vec<(String, f64)>);

impl UtilityScorer for TableScorer {
    fn score(&self, q: &UtilityQuery) -> Result<[f64; 3], UtilityError> {
        Ok([0, 1, 2].map(|i| {
            self.0
                .iter()
                .find(|(t, _)| *t == q.candidates[i])
                .map_or(0.0, |(_, s)| *s)
        }))
    }
}

struct Mapped<F: Fn(f64) -> f64>(TableScorer, F);

impl<F: Fn(f64) -> f64> UtilityScorer for Mapped<F> {
    fn score(&self, q: &UtilityQuery) -> Result<[f64; 3], UtilityError> {
        self.0.score(q).map(|s| s.map(&self.1))
    }
}

struct Failing;

impl UtilityScorer for Failing {
    fn score(&self, _: &UtilityQuery) -> Result<[f64; 3], UtilityError> {
        Err(UtilityError::Timeout)
    }
}

fn ranked(probs: &[f64], open: &[bool]) -> RankResult {
    let mut mask = ActionMask::all_open(probs.len());
    mask.feasible = open.to_vec();
    select(probs, mask, 3).unwrap()
}

fn texts(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("candidate {i}")).collect()
}

fn inputs() -> impl Strategy<Value = (Vec<f64>, Vec<bool>, Vec<f64>)> {
    (1usize..12).prop_flat_map(|n| {
        (
            prop::collection::vec(0.0f64..1.0, n),
            prop::collection::vec(any::<bool>(), n).prop_map(|mut m| {
                m[0] = true;
                m
            }),
            prop::collection::vec(-5.0f64..5.0, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn chosen_is_always_in_the_top_three((probs, open, util) in inputs()) {
        let r = ranked(&probs, &open);
        let t = texts(probs.len());
        let scorer = TableScorer(t.iter().cloned().zip(util).collect());
        let out = rerank_top3(&r, &t, "The king waits.", &scorer);
        prop_assert!(r.topk.iter().take(3).any(|&i| i == out.chosen));
        prop_assert!(r.mask.feasible[out.chosen]);
    }

    #[test]
    fn increasing_transforms_keep_the_choice((probs, open, util) in inputs(), a in 0.1f64..10.0, b in -3.0f64..3.0) {
        let r = ranked(&probs, &open);
        let t = texts(probs.len());
        let table: Vec<(String, f64)> = t.iter().cloned().zip(util).collect();
        let base = rerank_top3(&r, &t, "ctx", &TableScorer(table.clone())).chosen;
        let affine = rerank_top3(&r, &t, "ctx", &Mapped(TableScorer(table.clone()), move |s| a * s + b)).chosen;
        let exp = rerank_top3(&r, &t, "ctx", &Mapped(TableScorer(table), f64::exp)).chosen;
        prop_assert_eq!(base, affine);
        prop_assert_eq!(base, exp);
    }

    #[test]
    fn constant_scorer_reproduces_the_ranker((probs, open, _u) in inputs(), c in -1e3f64..1e3) {
        let r = ranked(&probs, &open);
        let out = rerank_top3(&r, &texts(probs.len()), "ctx", &ConstantScorer(c));
        prop_assert_eq!(out.chosen, r.chosen);
        prop_assert!(out.reranked);
    }

    #[test]
    fn scorer_failure_falls_back_to_the_ranker((probs, open, _u) in inputs()) {
        let r = ranked(&probs, &open);
        let out = rerank_top3(&r, &texts(probs.len()), "ctx", &Failing);
        prop_assert_eq!(out.chosen, r.chosen);
        prop_assert!(!out.reranked);
        prop_assert!(out.fallback_reason.is_some());
    }
}

#[test]
fn scorer_preferring_third_picks_third() {
    let r = ranked(&[0.5, 0.3, 0.2], &[true; 3]);
    let t = texts(3);
    let scorer = TableScorer(vec![(t[2].clone(), 9.0)]);
    let out = rerank_top3(&r, &t, "ctx", &scorer);
    assert_eq!(out.chosen, r.topk[2]);
}

#[test]
fn utility_ties_go_to_the_ranker_order() {
    let r = ranked(&[0.2, 0.5, 0.3], &[true; 3]);
    let t = texts(3);
    let scorer = TableScorer(vec![(t[0].clone(), 1.0), (t[2].clone(), 1.0)]);
    // candidates 0 and 2 tie on utility; 2 has the higher ranker score
    assert_eq!(rerank_top3(&r, &t, "ctx", &scorer).chosen, 2);
}

#[test]
fn empty_context_falls_back() {
    let r = ranked(&[0.6, 0.4], &[true; 2]);
    let out = rerank_top3(&r, &texts(2), "  ", &ConstantScorer(0.0));
    assert!(!out.reranked);
    assert_eq!(out.chosen, 0);
}

#[test]
fn short_top_k_is_padded_and_padding_is_ignored() {
    let r = ranked(&[0.1, 0.9], &[true, true]);
    let t = texts(2);
    let scorer = TableScorer(vec![(t[0].clone(), 2.0)]);
    let out = rerank_top3(&r, &t, "ctx", &scorer);
    assert_eq!(out.utility.as_ref().unwrap().len(), 2);
    assert_eq!(out.chosen, 0);
}
