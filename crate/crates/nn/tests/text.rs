use std::collections::BTreeSet;

use mindstate_nn::text::tokenize;
use mindstate_nn::{ParamStore, TextConfig, TextEncoder};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn encoder() -> (ParamStore, TextEncoder) {
    let mut store = ParamStore::new();
    let enc = TextEncoder::new(
        &mut store,
        "text",
        TextConfig::default(),
        &mut ChaCha8Rng::seed_from_u64(0),
    );
    (store, enc)
}

fn corpus(n: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut words = BTreeSet::new();
    while words.len() < n {
        let len = rng.gen_range(2..9);
        words.insert((0..len).map(|_| rng.gen_range(b'a'..=b'z') as char).collect::<String>());
    }
    let mut words: Vec<String> = words.into_iter().collect();
    words.shuffle(&mut rng);
    words
}

#[test]
fn one_token_edits_rarely_collide() {
    let (store, enc) = encoder();
    let words = corpus(10_000);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut collisions = 0;
    for (i, w) in words.iter().enumerate() {
        // a 4-token sentence and a copy with one token swapped for another corpus word
        let mut a: Vec<String> = (0..4).map(|_| words.choose(&mut rng).unwrap().clone()).collect();
        let pos = rng.gen_range(0..4);
        a[pos] = words[(i + 1) % words.len()].clone();
        let mut b = a.clone();
        b[pos] = w.clone();
        let (ea, eb) = (enc.encode(&store, &a), enc.encode(&store, &b));
        if ea.pooled == eb.pooled {
            collisions += 1;
        }
    }
    let rate = collisions as f64 / words.len() as f64;
    assert!(rate < 0.05, "collision rate {rate}");
}

#[test]
fn unigram_bucket_load_is_near_uniform() {
    let (_, enc) = encoder();
    let words = corpus(10_000);
    let used: BTreeSet<usize> = words.iter().map(|w| enc.unigram_bucket(w)).collect();
    // expected distinct buckets for 10k uniform draws into 4096
    let b = 4096.0_f64;
    let expected = b * (1.0 - (1.0 - 1.0 / b).powi(10_000));
    assert!(
        (used.len() as f64 - expected).abs() < 0.03 * expected,
        "{} vs {expected}",
        used.len()
    );
}

#[test]
fn same_text_same_encoding_and_empty_is_zero() {
    let (store, enc) = encoder();
    let a = enc.encode_text(&store, "The king takes the crown.");
    let b = enc.encode_text(&store, "The king takes the crown.");
    assert_eq!(a, b);
    let empty = enc.encode_text(&store, "");
    assert!(empty.pooled.iter().all(|v| *v == 0.0));
    assert_eq!(empty.tokens.rows(), 0);
}

#[test]
fn per_token_rows_are_capped() {
    let (store, enc) = encoder();
    let long = vec!["word".to_string(); 200];
    assert_eq!(
        enc.encode(&store, &long).tokens.rows(),
        TextConfig::default().max_tokens
    );
    assert_eq!(tokenize("Give [self] the cup!"), ["give", "[self]", "the", "cup"]);
}
