use mindstate_core::{mask_candidates, parse_setting, GraphConfig, MaskMode, SynthConfig, TurnKind};
use mindstate_harness::generate::generate;
use mindstate_harness::ingest::parse_episodes;
use mindstate_harness::{replay, ReplayMode};

fn config(seed: u64, n: usize) -> SynthConfig {
    SynthConfig {
        n_episodes: n,
        seed,
        ..SynthConfig::default()
    }
}

#[test]
fn same_seed_gives_identical_bytes() {
    assert_eq!(generate(&config(0, 10)), generate(&config(0, 10)));
    assert_ne!(generate(&config(0, 10)), generate(&config(1, 10)));
}

#[test]
fn every_gold_action_is_feasible_at_its_turn() {
    let eps = parse_episodes(&generate(&config(3, 300))).unwrap().episodes;
    for ep in &eps {
        let t = replay(ep, ReplayMode::Strict, GraphConfig::default(), None).unwrap();
        for r in t.turns.iter().filter(|r| r.kind == TurnKind::Action) {
            assert_eq!(r.gold_feasible, Some(true), "{} turn {}", ep.id, r.turn);
        }
    }
}

#[test]
fn every_action_turn_offers_an_infeasible_distractor() {
    let eps = parse_episodes(&generate(&config(4, 300))).unwrap().episodes;
    let mut checked = 0;
    for ep in &eps {
        let mut g = parse_setting(&ep.setting, GraphConfig::default()).unwrap();
        let t = replay(ep, ReplayMode::Strict, GraphConfig::default(), None).unwrap();
        for (i, turn) in ep.turns.iter().enumerate() {
            if let (TurnKind::Action, Some(cands), Some(gold)) = (turn.kind, turn.typed_candidates(), turn.gold_index) {
                let actor = g.find(&turn.speaker).unwrap();
                let mask = mask_candidates(&cands, actor, &g, MaskMode::Strict);
                assert!(mask.feasible[gold]);
                assert!(mask.masked_count() >= 1, "{} turn {i}", ep.id);
                checked += 1;
            }
            g = mindstate_core::DiscreteGraph::restore(t.snapshots[i + 1].as_bytes()).unwrap();
        }
    }
    assert!(checked >= 300);
}

#[test]
fn candidate_lists_have_the_configured_size() {
    let eps = parse_episodes(&generate(&config(5, 50))).unwrap().episodes;
    for turn in eps.iter().flat_map(|e| &e.turns).filter(|t| t.is_target()) {
        assert_eq!(turn.candidates.as_ref().unwrap().len(), 20);
    }
}
