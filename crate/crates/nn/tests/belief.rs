mod common;

use mindstate_core::{OpKind, Turn, TurnKind};
use mindstate_nn::{GraphMode, Model, RunOptions, TurnEffect};
use proptest::prelude::*;

const SAYINGS: [&str; 6] = [
    "I will give you the cup",
    "take it",
    "where is the knife?",
    "hello there",
    "drop everything now",
    "",
];

fn options(mode: GraphMode) -> RunOptions {
    RunOptions {
        mode,
        ..RunOptions::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn dense_entries_stay_in_range(seed in 0u64..1000, picks in prop::collection::vec((0usize..6, any::<bool>(), 0usize..3), 1..12)) {
        let model = Model::new(common::small_config(6, seed % 3)).unwrap();
        let ep = &common::episodes(1, seed)[0];
        let (me, partner) = (ep.setting.self_name(), ep.setting.partner_name());
        let mut state = model.initial_state(&ep.setting).unwrap();
        for (i, mine, k) in picks {
            let speaker = if mine { &me } else { &partner };
            let kind = TurnKind::ALL[k];
            let turn = Turn::new(speaker.clone(), kind, SAYINGS[i]);
            let mode = [GraphMode::Continuous, GraphMode::Hybrid][usize::from(mine)];
            let (next, _) = model.hybrid_step(&state, &turn, &me, &partner, options(mode)).unwrap();
            prop_assert!(next.dense.in_range());
            state = next;
        }
    }
}

#[test]
fn hybrid_actions_fix_the_sign_of_touched_entries() {
    let model = Model::new(common::small_config(6, 0)).unwrap();
    let mut touched = 0;
    for ep in common::episodes(30, 11) {
        let (me, partner) = (ep.setting.self_name(), ep.setting.partner_name());
        let mut state = model.initial_state(&ep.setting).unwrap();
        for turn in &ep.turns {
            let (next, effect) = model
                .hybrid_step(&state, turn, &me, &partner, options(GraphMode::Hybrid))
                .unwrap();
            if let TurnEffect::Applied(delta) = effect {
                for op in &delta.ops {
                    let v = next.dense.get(op.relation, op.src.0, op.dst.0);
                    let present = next.discrete.has_edge(op.relation, op.src, op.dst);
                    assert_eq!(present, op.kind == OpKind::Add);
                    assert_eq!(v > 0.0, present, "{turn:?}");
                    touched += 1;
                }
            }
            state = next;
        }
    }
    assert!(touched > 50);
}

#[test]
fn emotes_change_nothing() {
    let model = Model::new(common::small_config(6, 0)).unwrap();
    let ep = &common::episodes(1, 3)[0];
    let (me, partner) = (ep.setting.self_name(), ep.setting.partner_name());
    let state = model.initial_state(&ep.setting).unwrap();
    for mode in [GraphMode::Discrete, GraphMode::Continuous, GraphMode::Hybrid] {
        let turn = Turn::new(me.clone(), TurnKind::Emote, "smile");
        let (next, effect) = model.hybrid_step(&state, &turn, &me, &partner, options(mode)).unwrap();
        assert_eq!(effect, TurnEffect::Unchanged);
        assert_eq!(next, state);
    }
}

#[test]
fn utterances_move_the_dense_graph_only_outside_discrete_mode() {
    let model = Model::new(common::small_config(6, 0)).unwrap();
    let ep = &common::episodes(1, 3)[0];
    let (me, partner) = (ep.setting.self_name(), ep.setting.partner_name());
    let state = model.initial_state(&ep.setting).unwrap();
    let turn = Turn::new(partner.clone(), TurnKind::Utterance, "I will give you the cup");
    let (d, _) = model
        .hybrid_step(&state, &turn, &me, &partner, options(GraphMode::Discrete))
        .unwrap();
    assert_eq!(d, state);
    let (h, _) = model
        .hybrid_step(&state, &turn, &me, &partner, options(GraphMode::Hybrid))
        .unwrap();
    assert_eq!(h.discrete, state.discrete);
    assert_ne!(h.dense, state.dense);
}

#[test]
fn trajectories_are_bit_identical_per_seed() {
    let run = || {
        let model = Model::new(common::small_config(6, 4)).unwrap();
        let ep = &common::episodes(1, 8)[0];
        let (me, partner) = (ep.setting.self_name(), ep.setting.partner_name());
        let mut state = model.initial_state(&ep.setting).unwrap();
        let mut out = Vec::new();
        for turn in &ep.turns {
            state = model
                .hybrid_step(&state, turn, &me, &partner, options(GraphMode::Continuous))
                .unwrap()
                .0;
            out.extend(state.dense.as_slice().iter().map(|v| v.to_bits()));
        }
        out
    };
    assert_eq!(run(), run());
}
