//! Hashed unigram+bigram text encoder.
//!
//! Tokens and adjacent-token pairs hash (FNV-1a, seeded) into a shared
//! embedding table. The pooled encoding is the mean bucket embedding passed
//! through a two-layer MLP; per-token vectors are the raw unigram embeddings.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::params::{ParamId, ParamStore};
use crate::tape::{Tape, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextConfig {
    pub buckets: usize,
    pub dim: usize,
    pub hidden: usize,
    pub max_tokens: usize,
    pub hash_seed: u64,
}

impl Default for TextConfig {
    fn default() -> Self {
        TextConfig {
            buckets: 4096,
            dim: 64,
            hidden: 64,
            max_tokens: 64,
            hash_seed: 0x4c49_4748_54,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TextEncoding {
    pub pooled: Vec<f64>,
    /// `T × d`, `T ≤ max_tokens`.
    pub tokens: Matrix,
}

/// Lowercased word tokens; brackets and apostrophes stay inside tokens so
/// markers like `[self]` survive.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || matches!(c, '\'' | '[' | ']' | '_')))
        .map(|t| t.trim_matches('\'').to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

pub fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Clone, Debug)]
pub struct TextEncoder {
    pub config: TextConfig,
    pub table: ParamId,
    w1: ParamId,
    b1: ParamId,
    w2: ParamId,
    b2: ParamId,
}

impl TextEncoder {
    pub fn new<R: Rng>(store: &mut ParamStore, prefix: &str, config: TextConfig, rng: &mut R) -> Self {
        let bound = (3.0 / config.dim as f64).sqrt();
        TextEncoder {
            config,
            table: store.uniform(format!("{prefix}.table"), config.buckets, config.dim, bound, rng),
            w1: store.xavier(format!("{prefix}.w1"), config.dim, config.hidden, rng),
            b1: store.zeros(format!("{prefix}.b1"), 1, config.hidden),
            w2: store.xavier(format!("{prefix}.w2"), config.hidden, config.dim, rng),
            b2: store.zeros(format!("{prefix}.b2"), 1, config.dim),
        }
    }

    pub fn unigram_bucket(&self, token: &str) -> usize {
        (fnv1a(self.config.hash_seed, token.as_bytes()) % self.config.buckets as u64) as usize
    }

    pub fn bigram_bucket(&self, a: &str, b: &str) -> usize {
        let joined = format!("{a}\u{1}{b}");
        (fnv1a(self.config.hash_seed.rotate_left(17), joined.as_bytes()) % self.config.buckets as u64) as usize
    }

    /// Unigram then bigram bucket ids.
    pub fn ngram_ids(&self, tokens: &[String]) -> Vec<usize> {
        let mut ids: Vec<usize> = tokens.iter().map(|t| self.unigram_bucket(t)).collect();
        ids.extend(tokens.windows(2).map(|w| self.bigram_bucket(&w[0], &w[1])));
        ids
    }

    /// Pooled encodings, one row per text; rows for empty texts are zero.
    pub fn pooled_on(&self, tape: &mut Tape, texts: &[Vec<String>]) -> Var {
        let bags: Vec<Vec<usize>> = texts.iter().map(|t| self.ngram_ids(t)).collect();
        let empty: Vec<bool> = bags.iter().map(Vec::is_empty).collect();
        let x = tape.embed_bag(self.table, bags);
        let (w1, b1, w2, b2) = (
            tape.param(self.w1),
            tape.param(self.b1),
            tape.param(self.w2),
            tape.param(self.b2),
        );
        let h = tape.matmul(x, w1);
        let h = tape.add_broadcast(h, b1);
        let h = tape.tanh(h);
        let o = tape.matmul(h, w2);
        let o = tape.add_broadcast(o, b2);
        if empty.iter().any(|e| *e) {
            let keep = Matrix::from_vec(
                empty.len(),
                1,
                empty.iter().map(|e| if *e { 0.0 } else { 1.0 }).collect(),
            );
            let keep = tape.constant(keep);
            tape.mul_broadcast(o, keep)
        } else {
            o
        }
    }

    /// Embeddings of the last `max_tokens` tokens, `T × d`.
    pub fn tokens_on(&self, tape: &mut Tape, tokens: &[String]) -> Var {
        let start = tokens.len().saturating_sub(self.config.max_tokens);
        let bags = tokens[start..].iter().map(|t| vec![self.unigram_bucket(t)]).collect();
        tape.embed_bag(self.table, bags)
    }

    pub fn encode(&self, store: &ParamStore, tokens: &[String]) -> TextEncoding {
        let mut tape = Tape::new(store);
        let pooled = self.pooled_on(&mut tape, &[tokens.to_vec()]);
        let toks = self.tokens_on(&mut tape, tokens);
        TextEncoding {
            pooled: tape.value(pooled).as_slice().to_vec(),
            tokens: tape.value(toks).clone(),
        }
    }

    pub fn encode_text(&self, store: &ParamStore, text: &str) -> TextEncoding {
        self.encode(store, &tokenize(text))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn encoder() -> (ParamStore, TextEncoder) {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let enc = TextEncoder::new(&mut store, "text", TextConfig::default(), &mut rng);
        (store, enc)
    }

    #[test]
    fn empty_text_is_zero() {
        let (store, enc) = encoder();
        let e = enc.encode_text(&store, "");
        assert!(e.pooled.iter().all(|x| *x == 0.0));
        assert_eq!(e.pooled.len(), 64);
        assert_eq!(e.tokens.rows(), 0);
    }

    #[test]
    fn deterministic() {
        let (store, enc) = encoder();
        assert_eq!(
            enc.encode_text(&store, "give scepter to servant"),
            enc.encode_text(&store, "give scepter to servant")
        );
    }

    #[test]
    fn token_window_is_capped() {
        let (store, enc) = encoder();
        let long: Vec<String> = (0..100).map(|i| format!("w{i}")).collect();
        assert_eq!(enc.encode(&store, &long).tokens.rows(), 64);
    }

    #[test]
    fn tokenizer_keeps_markers() {
        assert_eq!(
            tokenize("The King's [self] sword!"),
            vec!["the", "king's", "[self]", "sword"]
        );
    }

    #[test]
    fn batched_rows_match_single() {
        let (store, enc) = encoder();
        let texts = vec![tokenize("a red apple"), vec![], tokenize("old rope")];
        let mut tape = Tape::new(&store);
        let v = enc.pooled_on(&mut tape, &texts);
        let m = tape.value(v).clone();
        for (i, t) in texts.iter().enumerate() {
            assert_eq!(m.row(i), enc.encode(&store, t).pooled.as_slice());
        }
    }
}
