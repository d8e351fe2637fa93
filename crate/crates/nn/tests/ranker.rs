mod common;

use mindstate_core::{ActionMask, Candidate, CandidateKind, Episode, Turn, TurnKind};
use mindstate_nn::{select, Model, ModelConfig, NnError, RunOptions};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mask(open: &[bool]) -> ActionMask {
    let mut m = ActionMask::all_open(open.len());
    m.feasible = open.to_vec();
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn masked_candidates_are_never_chosen(
        raw in prop::collection::vec(prop_oneof![Just(0.25), 0.0f64..1.0], 1..25),
        open in prop::collection::vec(any::<bool>(), 25),
        k in 1usize..6,
    ) {
        let n = raw.len();
        let z: f64 = raw.iter().sum::<f64>().max(1e-12);
        let probs: Vec<f64> = raw.iter().map(|x| x / z).collect();
        let open = &open[..n];
        match select(&probs, mask(open), k) {
            Err(NnError::AllMasked) => prop_assert!(open.iter().all(|o| !o)),
            Err(e) => prop_assert!(false, "{e}"),
            Ok(r) => {
                prop_assert!(r.topk.iter().all(|&i| open[i]));
                prop_assert!(open[r.chosen]);
                prop_assert_eq!(r.chosen, r.topk[0]);
                prop_assert_eq!(r.topk.len(), k.min(open.iter().filter(|o| **o).count()));
                let total: f64 = r.scores.iter().sum();
                if probs.iter().zip(open).any(|(p, o)| *o && *p > 0.0) {
                    prop_assert!((total - 1.0).abs() < 1e-9);
                }
                for (i, s) in r.scores.iter().enumerate() {
                    if !open[i] {
                        prop_assert_eq!(*s, 0.0);
                    }
                }
                // descending, ties to the lower index
                for w in r.topk.windows(2) {
                    let (a, b) = (r.scores[w[0]], r.scores[w[1]]);
                    prop_assert!(a > b || (a == b && w[0] < w[1]));
                }
                let again = select(&probs, mask(open), k).unwrap();
                prop_assert_eq!(again.topk, r.topk);
            }
        }
    }
}

#[test]
fn infeasible_top_candidate_leaves_top_k() {
    let r = select(&[0.7, 0.2, 0.1], mask(&[false, true, true]), 3).unwrap();
    assert_eq!(r.topk, [1, 2]);
    assert!((r.scores[1] - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn identical_candidates_score_uniformly() {
    let model = Model::new(common::small_config(8, 0)).unwrap();
    let ctx: Vec<f64> = (0..32).map(|i| (i as f64).sin()).collect();
    for k in [1, 2, 7] {
        let c = vec![Candidate::new("hug the king", CandidateKind::Action); k];
        let p = model.score_candidates(&ctx, &c).unwrap();
        assert!(p.iter().all(|x| (x - 1.0 / k as f64).abs() < 1e-12), "{p:?}");
    }
    assert!(matches!(
        model.score_candidates(&ctx, &[]),
        Err(NnError::EmptyCandidateList)
    ));
    assert!(model
        .score_candidates(&ctx[..5], &[Candidate::new("x", CandidateKind::Utterance)])
        .is_err());
}

#[test]
fn untrained_recall_is_chance_level() {
    // gold position uniform over k random-word candidates
    let model = Model::new(ModelConfig::default()).unwrap();
    let base = common::episodes(1, 0).remove(0);
    let vocab = [
        "apple", "stone", "lamp", "river", "song", "door", "bread", "coin", "tree", "boat", "cloud", "key",
    ];
    let (k, trials) = (10usize, 1000usize);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut hits = 0;
    for _ in 0..trials {
        let cands: Vec<String> = (0..k)
            .map(|_| {
                let n = rng.gen_range(1..4);
                (0..n)
                    .map(|_| *vocab.choose(&mut rng).unwrap())
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        let gold = rng.gen_range(0..k);
        let ep = Episode {
            turns: vec![Turn {
                speaker: base.setting.self_name(),
                kind: TurnKind::Utterance,
                text: cands[gold].clone(),
                candidates: Some(cands),
                gold_index: Some(gold),
            }],
            ..base.clone()
        };
        let p = &model.predict(&ep, RunOptions::default()).unwrap()[0];
        let best = (0..k).fold(0, |b, i| if p.probs[i] > p.probs[b] { i } else { b });
        hits += usize::from(best == gold);
    }
    let p = 1.0 / k as f64;
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    let rate = hits as f64 / trials as f64;
    assert!(
        (rate - p).abs() <= 3.0 * sigma,
        "recall {rate}, chance {p} ± {}",
        3.0 * sigma
    );
}
