use mindstate_nn::{Biattend, Matrix, ParamStore};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn layer(dim: usize, seed: u64) -> (ParamStore, Biattend) {
    let mut store = ParamStore::new();
    let b = Biattend::new(&mut store, "att", dim, &mut ChaCha8Rng::seed_from_u64(seed));
    (store, b)
}

#[test]
fn mentioned_node_gets_the_most_attention() {
    let (mut store, b) = layer(3, 0);
    let (wg, wt, wgt) = b.params();
    *store.get_mut(wg) = Matrix::zeros(3, 1);
    *store.get_mut(wt) = Matrix::zeros(3, 1);
    *store.get_mut(wgt) = Matrix::row_vector(vec![1.0; 3]);
    let nodes = Matrix::from_vec(3, 3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.3, 0.3, 0.3]);
    // the dialogue mentions node 1: its token embedding equals the node's
    let tokens = Matrix::row_vector(nodes.row(1).to_vec());
    let a = b.attend(&store, &nodes, &tokens).unwrap();
    // oracle: softmax of the dot products g_i · t
    let dots: Vec<f64> = (0..3)
        .map(|i| nodes.row(i).iter().zip(tokens.row(0)).map(|(x, y)| x * y).sum())
        .collect();
    let z: f64 = dots.iter().map(|x| x.exp()).sum();
    for i in 0..3 {
        assert!((a.text_to_graph.get(0, i) - dots[i].exp() / z).abs() < 1e-12);
    }
    let best = (0..3)
        .max_by(|&i, &j| a.text_to_graph.get(0, i).total_cmp(&a.text_to_graph.get(0, j)))
        .unwrap();
    assert_eq!(best, 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn attention_is_normalized_and_finite(
        n in 1usize..6,
        t in 0usize..6,
        vals in prop::collection::vec(-3.0f64..3.0, 60),
        seed in 0u64..8,
    ) {
        let d = 5;
        let (store, b) = layer(d, seed);
        let nodes = Matrix::from_vec(n, d, vals[..n * d].to_vec());
        let tokens = Matrix::from_vec(t, d, vals[30..30 + t * d].to_vec());
        let a = b.attend(&store, &nodes, &tokens).unwrap();
        prop_assert_eq!(a.fused.len(), 4 * d);
        prop_assert!(a.fused.iter().all(|v| v.is_finite()));
        if t > 0 {
            for m in [&a.text_to_graph, &a.graph_to_text] {
                for i in 0..m.rows() {
                    prop_assert!((m.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn width_mismatch_is_an_error() {
    let (store, b) = layer(4, 0);
    assert!(b.attend(&store, &Matrix::zeros(2, 4), &Matrix::zeros(2, 3)).is_err());
}
