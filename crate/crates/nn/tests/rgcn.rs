use mindstate_nn::{Matrix, ParamStore, Rgcn, RgcnConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn encoder(dim: usize, layers: usize, seed: u64) -> (ParamStore, Rgcn) {
    let mut store = ParamStore::new();
    let config = RgcnConfig {
        dim,
        layers,
        ..RgcnConfig::default()
    };
    let rgcn = Rgcn::new(&mut store, "g", config, &mut ChaCha8Rng::seed_from_u64(seed));
    (store, rgcn)
}

fn graph() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>, Vec<usize>)> {
    (1usize..7).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(-1.0f64..1.0, n * 6),
            prop::collection::vec(prop_oneof![Just(0.0), Just(1.0), -1.0f64..1.0], 6 * n * n),
            Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn node_permutation_equivariance((n, feats, adj, perm) in graph(), seed in 0u64..4) {
        let d = 6;
        let (store, rgcn) = encoder(d, 3, seed);
        let r = rgcn.config.relations;
        let features = Matrix::from_vec(n, d, feats);
        let a: Vec<Matrix> = (0..r).map(|k| Matrix::from_vec(n, n, adj[k * n * n..(k + 1) * n * n].to_vec())).collect();
        // slot i of the permuted graph holds entity perm[i]
        let pf = Matrix::from_vec(n, d, (0..n).flat_map(|i| features.row(perm[i]).to_vec()).collect());
        let pa: Vec<Matrix> = a
            .iter()
            .map(|m| Matrix::from_vec(n, n, (0..n).flat_map(|i| (0..n).map(|j| m.get(perm[i], perm[j])).collect::<Vec<_>>()).collect()))
            .collect();
        let base = rgcn.encode(&store, &a, &features).unwrap();
        let moved = rgcn.encode(&store, &pa, &pf).unwrap();
        for i in 0..n {
            for k in 0..d {
                prop_assert!((moved.nodes.get(i, k) - base.nodes.get(perm[i], k)).abs() < 1e-10);
            }
        }
        for k in 0..d {
            prop_assert!((moved.pooled[k] - base.pooled[k]).abs() < 1e-10);
        }
        prop_assert!(base.nodes.as_slice().iter().all(|v| v.is_finite()));
    }
}

#[test]
fn parameter_count_matches_the_analytic_formula() {
    for (d, bases) in [(64, 3), (8, 2), (5, 1)] {
        let mut store = ParamStore::new();
        let config = RgcnConfig {
            dim: d,
            bases,
            layers: 6,
            ..RgcnConfig::default()
        };
        Rgcn::new(&mut store, "g", config, &mut ChaCha8Rng::seed_from_u64(0));
        let r = config.relations;
        // bases, coefficients for both edge directions, self weight, gate weight and bias
        let per_layer = bases * d * d + 2 * r * bases + d * d + d * d + d;
        assert_eq!(config.params_per_layer(), per_layer);
        for l in 0..6 {
            assert_eq!(store.scalar_count_with_prefix(&format!("g.{l}.")), per_layer);
        }
        assert_eq!(store.scalar_count(), 6 * per_layer);
    }
}

#[test]
fn edges_change_only_connected_nodes_after_one_layer() {
    let (store, rgcn) = encoder(4, 1, 9);
    let feats = Matrix::from_vec(3, 4, (0..12).map(|i| (i as f64 * 0.9).cos()).collect());
    let empty = vec![Matrix::zeros(3, 3); rgcn.config.relations];
    let mut one = empty.clone();
    one[0].set(0, 1, 1.0);
    let a = rgcn.encode(&store, &empty, &feats).unwrap();
    let b = rgcn.encode(&store, &one, &feats).unwrap();
    assert_ne!(a.nodes.row(0), b.nodes.row(0));
    assert_ne!(a.nodes.row(1), b.nodes.row(1));
    assert_eq!(a.nodes.row(2), b.nodes.row(2));
}
