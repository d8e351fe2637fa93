//! Bidirectional graph–text attention.
//!
//! `S[i][j] = w_g·g_i + w_t·t_j + w_gt·(g_i ∘ t_j)` for node `i` and token `j`.
//! Each token attends over nodes (`α`, giving `ĝ_j`), each node attends over
//! tokens (`β`, giving `t̂_i`). The fused context is
//! `[mean t ; mean ĝ ; mean t ∘ mean ĝ ; Σ_i σ(w_r·g_i + b_r) g_i]`
//! (layout `bidaf-gated-4d-v1`): the last slot is a gated sum over nodes
//! rather than `mean t̂`, so a graph fact can reach the scorer even when no
//! token points at it. `t̂` is still exposed through `graph_to_text`.

use rand::Rng;

use crate::error::{mismatch, NnError};
use crate::matrix::Matrix;
use crate::params::{ParamId, ParamStore};
use crate::tape::{Tape, Var};

pub const FUSED_LAYOUT: &str = "bidaf-gated-4d-v1";

#[derive(Clone, Debug)]
pub struct Biattend {
    pub dim: usize,
    w_g: ParamId,
    w_t: ParamId,
    w_gt: ParamId,
    w_r: ParamId,
    b_r: ParamId,
}

pub struct AttentionVars {
    pub fused: Var,
    /// `T × n`: token rows, distribution over nodes. `None` without tokens.
    pub text_to_graph: Option<Var>,
    /// `n × T`: node rows, distribution over tokens.
    pub graph_to_text: Option<Var>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Attention {
    pub fused: Vec<f64>,
    pub text_to_graph: Matrix,
    pub graph_to_text: Matrix,
}

impl Biattend {
    pub fn new<R: Rng>(store: &mut ParamStore, prefix: &str, dim: usize, rng: &mut R) -> Self {
        Biattend {
            dim,
            w_g: store.xavier(format!("{prefix}.w_g"), dim, 1, rng),
            w_t: store.xavier(format!("{prefix}.w_t"), dim, 1, rng),
            w_gt: store.xavier(format!("{prefix}.w_gt"), 1, dim, rng),
            w_r: store.xavier(format!("{prefix}.w_r"), dim, 1, rng),
            b_r: store.zeros(format!("{prefix}.b_r"), 1, 1),
        }
    }

    /// Parameter ids `(w_g, w_t, w_gt)`.
    pub fn params(&self) -> (ParamId, ParamId, ParamId) {
        (self.w_g, self.w_t, self.w_gt)
    }

    /// `nodes`: `n × d`; `tokens`: `T × d`. Fused output is `1 × 4d`.
    pub fn attend_on(&self, tape: &mut Tape, nodes: Var, tokens: Var) -> Result<AttentionVars, NnError> {
        let (n, dg) = tape.shape(nodes);
        let (t, dt) = tape.shape(tokens);
        if dg != self.dim || dt != self.dim {
            return Err(mismatch("biattend", self.dim, format!("nodes {dg}, tokens {dt}")));
        }
        let readout = self.node_readout(tape, nodes);
        let mt = tape.mean_rows(tokens);
        if t == 0 || n == 0 {
            // no attention possible: the attended summary is zero
            let zero = tape.constant(Matrix::zeros(1, self.dim));
            let prod = tape.mul(mt, zero);
            let fused = tape.concat_cols(&[mt, zero, prod, readout]);
            return Ok(AttentionVars {
                fused,
                text_to_graph: None,
                graph_to_text: None,
            });
        }
        let (wg, wt, wgt) = (tape.param(self.w_g), tape.param(self.w_t), tape.param(self.w_gt));
        let s_g = tape.matmul(nodes, wg); // n × 1
        let s_t = tape.matmul(tokens, wt); // T × 1
        let s_t_row = tape.transpose(s_t); // 1 × T
        let gw = tape.mul_broadcast(nodes, wgt);
        let tokens_t = tape.transpose(tokens);
        let s = tape.matmul(gw, tokens_t); // n × T
        let s = tape.add_broadcast(s, s_g);
        let s = tape.add_broadcast(s, s_t_row);

        let s_t_n = tape.transpose(s);
        let alpha = tape.softmax_rows(s_t_n); // T × n
        let g_hat = tape.matmul(alpha, nodes); // T × d
        let beta = tape.softmax_rows(s); // n × T

        let mg = tape.mean_rows(g_hat);
        let prod = tape.mul(mt, mg);
        let fused = tape.concat_cols(&[mt, mg, prod, readout]);
        Ok(AttentionVars {
            fused,
            text_to_graph: Some(alpha),
            graph_to_text: Some(beta),
        })
    }

    /// `Σ_i σ(w_r·g_i + b_r) g_i` as `1 × d`; zero without nodes.
    fn node_readout(&self, tape: &mut Tape, nodes: Var) -> Var {
        let n = tape.shape(nodes).0;
        if n == 0 {
            return tape.constant(Matrix::zeros(1, self.dim));
        }
        let (wr, br) = (tape.param(self.w_r), tape.param(self.b_r));
        let gate = tape.matmul(nodes, wr);
        let gate = tape.add_broadcast(gate, br);
        let gate = tape.sigmoid(gate);
        let weighted = tape.mul_broadcast(nodes, gate);
        let m = tape.mean_rows(weighted);
        tape.scale(m, n as f64)
    }

    pub fn attend(&self, store: &ParamStore, nodes: &Matrix, tokens: &Matrix) -> Result<Attention, NnError> {
        let mut tape = Tape::new(store);
        let (g, t) = (tape.constant(nodes.clone()), tape.constant(tokens.clone()));
        let out = self.attend_on(&mut tape, g, t)?;
        let grab = |v: Option<Var>, r, c| v.map_or_else(|| Matrix::zeros(r, c), |v| tape.value(v).clone());
        Ok(Attention {
            fused: tape.value(out.fused).as_slice().to_vec(),
            text_to_graph: grab(out.text_to_graph, tokens.rows(), nodes.rows()),
            graph_to_text: grab(out.graph_to_text, nodes.rows(), tokens.rows()),
        })
    }
}
