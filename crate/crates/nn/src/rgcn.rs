//! Relational GCN with basis-decomposed relation weights and highway gates.
//!
//! Every relation also sends messages against its edges, with its own basis
//! coefficients. Per layer, with `W_r = Σ_b a[r][b] · B_b` and
//! `W̄_r = Σ_b ā[r][b] · B_b`:
//!
//! ```text
//! m_i  = Σ_r Σ_j (A[r][j][i] · h_j W_r + A[r][i][j] · h_j W̄_r)
//! h'_i = tanh(m_i + h_i W_0)
//! g_i  = σ(m_i W_g + b_g)
//! out  = g ∘ h' + (1 − g) ∘ h
//! ```

use mindstate_core::{DiscreteGraph, EntityId, Relation};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{mismatch, NnError};
use crate::matrix::Matrix;
use crate::params::{ParamId, ParamStore};
use crate::tape::{Tape, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RgcnConfig {
    pub layers: usize,
    pub dim: usize,
    pub bases: usize,
    pub relations: usize,
}

impl Default for RgcnConfig {
    fn default() -> Self {
        RgcnConfig {
            layers: 6,
            dim: 64,
            bases: 3,
            relations: Relation::ALL.len(),
        }
    }
}

impl RgcnConfig {
    /// `bases·d² + 2R·bases (both directions) + d² (self) + d² + d (gate)`
    pub fn params_per_layer(&self) -> usize {
        let d = self.dim;
        self.bases * d * d + 2 * self.relations * self.bases + d * d + d * d + d
    }
}

#[derive(Clone, Debug)]
struct Layer {
    bases: Vec<ParamId>,
    coef: ParamId,
    self_w: ParamId,
    gate_w: ParamId,
    gate_b: ParamId,
}

#[derive(Clone, Debug)]
pub struct Rgcn {
    pub config: RgcnConfig,
    pub prefix: String,
    layers: Vec<Layer>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeEmbeddings {
    /// Row `i` is entity slot `i`.
    pub nodes: Matrix,
    pub pooled: Vec<f64>,
}

/// Re-lays `R` adjacency matrices (`A[r][src][dst]`, each `n × n`) as the
/// `R × n²` message matrix consumed by [`Rgcn::encode_on`]: entry
/// `[r][i·n + j] = A[r][j][i]`, the weight of the message `j → i`.
pub fn message_layout(adjacency: &[Matrix]) -> Matrix {
    let n = adjacency.first().map_or(0, Matrix::rows);
    let mut out = Matrix::zeros(adjacency.len(), n * n);
    for (r, a) in adjacency.iter().enumerate() {
        for src in 0..n {
            for dst in 0..n {
                out.set(r, dst * n + src, a.get(src, dst));
            }
        }
    }
    out
}

/// 0/1 adjacency of the first `n` entity slots of a discrete graph.
pub fn discrete_adjacency(graph: &DiscreteGraph, n: usize, relations: usize) -> Vec<Matrix> {
    let mut out = vec![Matrix::zeros(n, n); relations];
    for e in graph.edges() {
        let r = e.relation.index();
        if r < relations && e.src.0 < n && e.dst.0 < n {
            out[r].set(e.src.0, e.dst.0, 1.0);
        }
    }
    out
}

/// Flat index into the `R × n²` message layout for edge `src → dst`.
pub fn message_index(n: usize, relation: usize, src: EntityId, dst: EntityId) -> usize {
    relation * n * n + dst.0 * n + src.0
}

impl Rgcn {
    pub fn new<R: Rng>(store: &mut ParamStore, prefix: &str, config: RgcnConfig, rng: &mut R) -> Self {
        let d = config.dim;
        let layers = (0..config.layers)
            .map(|l| Layer {
                bases: (0..config.bases)
                    .map(|b| store.xavier(format!("{prefix}.{l}.basis{b}"), d, d, rng))
                    .collect(),
                coef: store.xavier(format!("{prefix}.{l}.coef"), 2 * config.relations, config.bases, rng),
                self_w: store.xavier(format!("{prefix}.{l}.self"), d, d, rng),
                gate_w: store.xavier(format!("{prefix}.{l}.gate_w"), d, d, rng),
                gate_b: store.zeros(format!("{prefix}.{l}.gate_b"), 1, d),
            })
            .collect();
        Rgcn {
            config,
            prefix: prefix.to_string(),
            layers,
        }
    }

    /// `messages`: `R × n²` (see [`message_layout`]); `features`: `n × d`.
    /// Returns node embeddings `n × d` and their mean `1 × d`.
    pub fn encode_on(&self, tape: &mut Tape, messages: Var, features: Var) -> Result<(Var, Var), NnError> {
        let (n, d) = tape.shape(features);
        if d != self.config.dim {
            return Err(mismatch("rgcn features", self.config.dim, d));
        }
        let expected = (self.config.relations, n * n);
        if tape.shape(messages) != expected {
            return Err(mismatch(
                "rgcn adjacency",
                format!("{expected:?}"),
                format!("{:?}", tape.shape(messages)),
            ));
        }
        // reversed[r][i·n + j] = messages[r][j·n + i]
        let r = self.config.relations;
        let mut idx = Vec::with_capacity(r * n * n);
        for rel in 0..r {
            for i in 0..n {
                for j in 0..n {
                    idx.push(rel * n * n + j * n + i);
                }
            }
        }
        let reversed = tape.gather(messages, idx, r, n * n);
        let messages = tape.concat_rows(&[messages, reversed]);
        let mut h = features;
        for layer in &self.layers {
            let coef = tape.param(layer.coef);
            let coef_t = tape.transpose(coef);
            let mixed = tape.matmul(coef_t, messages);
            let w0 = tape.param(layer.self_w);
            let mut incoming = None;
            for (b, basis) in layer.bases.iter().enumerate() {
                let m_b = tape.gather(mixed, (b * n * n..(b + 1) * n * n).collect(), n, n);
                let w_b = tape.param(*basis);
                let hb = tape.matmul(h, w_b);
                let msg = tape.matmul(m_b, hb);
                incoming = Some(match incoming {
                    Some(acc) => tape.add(acc, msg),
                    None => msg,
                });
            }
            let own = tape.matmul(h, w0);
            let incoming = match incoming {
                Some(m) => m,
                None => tape.constant(Matrix::zeros(n, d)),
            };
            let sum = tape.add(own, incoming);
            let candidate = tape.tanh(sum);
            let (gw, gb) = (tape.param(layer.gate_w), tape.param(layer.gate_b));
            let gate = tape.matmul(incoming, gw);
            let gate = tape.add_broadcast(gate, gb);
            let gate = tape.sigmoid(gate);
            let delta = tape.sub(candidate, h);
            let step = tape.mul(gate, delta);
            h = tape.add(h, step);
        }
        let pooled = tape.mean_rows(h);
        Ok((h, pooled))
    }

    /// Encodes `R` adjacency matrices `A[r][src][dst]` with node features.
    pub fn encode(
        &self,
        store: &ParamStore,
        adjacency: &[Matrix],
        features: &Matrix,
    ) -> Result<NodeEmbeddings, NnError> {
        if adjacency.len() != self.config.relations {
            return Err(mismatch("rgcn relations", self.config.relations, adjacency.len()));
        }
        if let Some(bad) = adjacency
            .iter()
            .find(|a| a.shape() != (features.rows(), features.rows()))
        {
            return Err(mismatch(
                "rgcn adjacency",
                format!("{0}x{0}", features.rows()),
                format!("{}x{}", bad.rows(), bad.cols()),
            ));
        }
        let mut tape = Tape::new(store);
        let m = tape.constant(message_layout(adjacency));
        let f = tape.constant(features.clone());
        let (nodes, pooled) = self.encode_on(&mut tape, m, f)?;
        Ok(NodeEmbeddings {
            nodes: tape.value(nodes).clone(),
            pooled: tape.value(pooled).as_slice().to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_adjacency_is_node_local() {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let config = RgcnConfig {
            dim: 8,
            ..Default::default()
        };
        let rgcn = Rgcn::new(&mut store, "g", config, &mut rng);
        let feats = Matrix::from_vec(3, 8, (0..24).map(|i| (i as f64 * 0.3).sin()).collect());
        let zero = vec![Matrix::zeros(3, 3); config.relations];
        let all = rgcn.encode(&store, &zero, &feats).unwrap();
        for i in 0..3 {
            let single = Matrix::from_vec(1, 8, feats.row(i).to_vec());
            let alone = rgcn
                .encode(&store, &vec![Matrix::zeros(1, 1); config.relations], &single)
                .unwrap();
            assert_eq!(all.nodes.row(i), alone.nodes.row(0));
        }
    }

    #[test]
    fn dimension_mismatch() {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rgcn = Rgcn::new(&mut store, "g", RgcnConfig::default(), &mut rng);
        let feats = Matrix::zeros(3, 64);
        let wrong = vec![Matrix::zeros(2, 2); 6];
        assert!(matches!(
            rgcn.encode(&store, &wrong, &feats),
            Err(NnError::DimensionMismatch { .. })
        ));
    }
}
