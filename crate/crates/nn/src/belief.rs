//! Continuous belief-graph updater.
//!
//! ```text
//! h_graph = f_e(graph summary)
//! Δg      = f_Δ([h_graph ; h_obs])
//! h_t     = GRU(Δg, h_{t-1})
//! G_t     = tanh(decoder(h_t)) reshaped to [R][N][N]
//! ```

use mindstate_core::{AtomicOp, DiscreteGraph, GraphDelta, OpKind, Relation};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{mismatch, NnError};
use crate::matrix::Matrix;
use crate::params::{ParamId, ParamStore};
use crate::tape::{Tape, Var};

/// Real-valued adjacency `[R][N][N]` with entries in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseBeliefGraph {
    relations: usize,
    nodes: usize,
    data: Vec<f64>,
}

impl DenseBeliefGraph {
    pub fn zeros(relations: usize, nodes: usize) -> Self {
        DenseBeliefGraph {
            relations,
            nodes,
            data: vec![0.0; relations * nodes * nodes],
        }
    }

    pub fn from_flat(relations: usize, nodes: usize, data: Vec<f64>) -> Result<Self, NnError> {
        if data.len() != relations * nodes * nodes {
            return Err(mismatch("dense graph", relations * nodes * nodes, data.len()));
        }
        Ok(DenseBeliefGraph { relations, nodes, data })
    }

    /// +1 on the discrete graph's edges among the first `nodes` slots, 0 elsewhere.
    pub fn from_discrete(graph: &DiscreteGraph, relations: usize, nodes: usize) -> Self {
        let mut g = DenseBeliefGraph::zeros(relations, nodes);
        for e in graph.edges() {
            if let Some(k) = g.index(e.relation.index(), e.src.0, e.dst.0) {
                g.data[k] = 1.0;
            }
        }
        g
    }

    pub fn relations(&self) -> usize {
        self.relations
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn index(&self, r: usize, src: usize, dst: usize) -> Option<usize> {
        (r < self.relations && src < self.nodes && dst < self.nodes)
            .then(|| r * self.nodes * self.nodes + src * self.nodes + dst)
    }

    pub fn get(&self, relation: Relation, src: usize, dst: usize) -> f64 {
        self.index(relation.index(), src, dst).map_or(0.0, |k| self.data[k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn in_range(&self) -> bool {
        self.data.iter().all(|x| x.is_finite() && (-1.0..=1.0).contains(x))
    }

    /// Flat positions and ±1 targets for a delta's ops (ADD → +1, DEL → −1),
    /// skipping triples outside the tensor. Later ops win.
    pub fn clamp_entries(&self, delta: &GraphDelta) -> Vec<(usize, f64)> {
        delta
            .ops
            .iter()
            .filter_map(|op: &AtomicOp| {
                let k = self.index(op.relation.index(), op.src.0, op.dst.0)?;
                Some((k, if op.kind == OpKind::Add { 1.0 } else { -1.0 }))
            })
            .collect()
    }

    pub fn clamp(&mut self, delta: &GraphDelta) {
        for (k, v) in self.clamp_entries(delta) {
            self.data[k] = v;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Identity,
    Tanh,
    Relu,
}

fn activate(tape: &mut Tape, x: Var, act: Activation) -> Var {
    match act {
        Activation::Identity => x,
        Activation::Tanh => tape.tanh(x),
        Activation::Relu => tape.relu(x),
    }
}

/// Two affine layers, each followed by an activation.
#[derive(Clone, Debug)]
pub struct Mlp2 {
    w1: ParamId,
    b1: ParamId,
    w2: ParamId,
    b2: ParamId,
    act1: Activation,
    act2: Activation,
}

impl Mlp2 {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        dims: (usize, usize, usize),
        acts: (Activation, Activation),
        rng: &mut R,
    ) -> Self {
        Mlp2 {
            w1: store.xavier(format!("{prefix}.w1"), dims.0, dims.1, rng),
            b1: store.zeros(format!("{prefix}.b1"), 1, dims.1),
            w2: store.xavier(format!("{prefix}.w2"), dims.1, dims.2, rng),
            b2: store.zeros(format!("{prefix}.b2"), 1, dims.2),
            act1: acts.0,
            act2: acts.1,
        }
    }

    pub fn on(&self, tape: &mut Tape, x: Var) -> Var {
        let (w1, b1, w2, b2) = (
            tape.param(self.w1),
            tape.param(self.b1),
            tape.param(self.w2),
            tape.param(self.b2),
        );
        let h = tape.matmul(x, w1);
        let h = tape.add_broadcast(h, b1);
        let h = activate(tape, h, self.act1);
        let o = tape.matmul(h, w2);
        let o = tape.add_broadcast(o, b2);
        activate(tape, o, self.act2)
    }

    pub fn output_bias(&self) -> ParamId {
        self.b2
    }
}

/// GRU cell with PyTorch gate equations (gate order r, z, n).
#[derive(Clone, Debug)]
pub struct Gru {
    hidden: usize,
    w_i: ParamId,
    b_i: ParamId,
    w_h: ParamId,
    b_h: ParamId,
}

impl Gru {
    pub fn new<R: Rng>(store: &mut ParamStore, prefix: &str, input: usize, hidden: usize, rng: &mut R) -> Self {
        Gru {
            hidden,
            w_i: store.xavier(format!("{prefix}.w_i"), input, 3 * hidden, rng),
            b_i: store.zeros(format!("{prefix}.b_i"), 1, 3 * hidden),
            w_h: store.xavier(format!("{prefix}.w_h"), hidden, 3 * hidden, rng),
            b_h: store.zeros(format!("{prefix}.b_h"), 1, 3 * hidden),
        }
    }

    pub fn on(&self, tape: &mut Tape, x: Var, h: Var) -> Var {
        let hs = self.hidden;
        let (wi, bi, wh, bh) = (
            tape.param(self.w_i),
            tape.param(self.b_i),
            tape.param(self.w_h),
            tape.param(self.b_h),
        );
        let gi = tape.matmul(x, wi);
        let gi = tape.add_broadcast(gi, bi);
        let gh = tape.matmul(h, wh);
        let gh = tape.add_broadcast(gh, bh);
        let (ir, iz, inn) = (
            tape.slice_cols(gi, 0, hs),
            tape.slice_cols(gi, hs, hs),
            tape.slice_cols(gi, 2 * hs, hs),
        );
        let (hr, hz, hn) = (
            tape.slice_cols(gh, 0, hs),
            tape.slice_cols(gh, hs, hs),
            tape.slice_cols(gh, 2 * hs, hs),
        );
        let r = tape.add(ir, hr);
        let r = tape.sigmoid(r);
        let z = tape.add(iz, hz);
        let z = tape.sigmoid(z);
        let rn = tape.mul(r, hn);
        let n = tape.add(inn, rn);
        let n = tape.tanh(n);
        // (1 − z) ∘ n + z ∘ h  =  n + z ∘ (h − n)
        let diff = tape.sub(h, n);
        let zd = tape.mul(z, diff);
        tape.add(n, zd)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeliefConfig {
    /// Width of the graph summary and observation encodings.
    pub input: usize,
    pub hidden: usize,
    pub mlp_hidden: usize,
    pub decoder_hidden: usize,
    pub relations: usize,
    pub nodes: usize,
}

impl Default for BeliefConfig {
    fn default() -> Self {
        BeliefConfig {
            input: 64,
            hidden: 64,
            mlp_hidden: 64,
            decoder_hidden: 64,
            relations: Relation::ALL.len(),
            nodes: 32,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpdaterState {
    pub hidden: Vec<f64>,
}

impl UpdaterState {
    pub fn zeros(config: &BeliefConfig) -> Self {
        UpdaterState {
            hidden: vec![0.0; config.hidden],
        }
    }
}

#[derive(Clone, Debug)]
pub struct BeliefUpdater {
    pub config: BeliefConfig,
    f_e: Mlp2,
    f_delta: Mlp2,
    gru: Gru,
    decoder: Mlp2,
}

impl BeliefUpdater {
    pub fn new<R: Rng>(store: &mut ParamStore, prefix: &str, config: BeliefConfig, rng: &mut R) -> Self {
        use Activation::*;
        let c = config;
        BeliefUpdater {
            config,
            f_e: Mlp2::new(
                store,
                &format!("{prefix}.f_e"),
                (c.input, c.mlp_hidden, c.input),
                (Tanh, Relu),
                rng,
            ),
            f_delta: Mlp2::new(
                store,
                &format!("{prefix}.f_delta"),
                (2 * c.input, c.mlp_hidden, c.input),
                (Tanh, Relu),
                rng,
            ),
            gru: Gru::new(store, &format!("{prefix}.gru"), c.input, c.hidden, rng),
            decoder: Mlp2::new(
                store,
                &format!("{prefix}.decoder"),
                (c.hidden, c.decoder_hidden, c.relations * c.nodes * c.nodes),
                (Relu, Tanh),
                rng,
            ),
        }
    }

    pub fn decoder_bias(&self) -> ParamId {
        self.decoder.output_bias()
    }

    /// `f_e` applied to a `1 × input` graph summary.
    pub fn summarize_on(&self, tape: &mut Tape, summary: Var) -> Var {
        self.f_e.on(tape, summary)
    }

    /// One update: returns the new hidden state `1 × hidden` and the dense
    /// graph as a flat `1 × R·N·N` row.
    pub fn step_on(&self, tape: &mut Tape, h_graph: Var, h_obs: Var, h_prev: Var) -> Result<(Var, Var), NnError> {
        let c = &self.config;
        for (what, v, want) in [
            ("h_graph", h_graph, c.input),
            ("h_obs", h_obs, c.input),
            ("hidden", h_prev, c.hidden),
        ] {
            if tape.shape(v) != (1, want) {
                return Err(mismatch(what, format!("1x{want}"), format!("{:?}", tape.shape(v))));
            }
        }
        let x = tape.concat_cols(&[h_graph, h_obs]);
        let delta = self.f_delta.on(tape, x);
        let h = self.gru.on(tape, delta, h_prev);
        let g = self.decoder.on(tape, h);
        Ok((h, g))
    }

    /// One continuous update (delta, GRU, decode) on plain vectors. `h_graph` is already `f_e` of the summary.
    pub fn continuous_step(
        &self,
        store: &ParamStore,
        state: &UpdaterState,
        h_graph: &[f64],
        h_obs: &[f64],
    ) -> Result<(UpdaterState, DenseBeliefGraph), NnError> {
        let mut tape = Tape::new(store);
        let hg = tape.constant(Matrix::row_vector(h_graph.to_vec()));
        let ho = tape.constant(Matrix::row_vector(h_obs.to_vec()));
        let hp = tape.constant(Matrix::row_vector(state.hidden.clone()));
        let (h, g) = self.step_on(&mut tape, hg, ho, hp)?;
        let c = &self.config;
        Ok((
            UpdaterState {
                hidden: tape.value(h).as_slice().to_vec(),
            },
            DenseBeliefGraph::from_flat(c.relations, c.nodes, tape.value(g).as_slice().to_vec())?,
        ))
    }

    /// `f_e` on a plain summary vector.
    pub fn summarize(&self, store: &ParamStore, summary: &[f64]) -> Vec<f64> {
        let mut tape = Tape::new(store);
        let s = tape.constant(Matrix::row_vector(summary.to_vec()));
        let h = self.summarize_on(&mut tape, s);
        tape.value(h).as_slice().to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> BeliefConfig {
        BeliefConfig {
            input: 8,
            hidden: 8,
            mlp_hidden: 8,
            decoder_hidden: 8,
            relations: 6,
            nodes: 4,
        }
    }

    fn build(seed: u64) -> (ParamStore, BeliefUpdater) {
        let mut store = ParamStore::new();
        let u = BeliefUpdater::new(&mut store, "belief", small(), &mut ChaCha8Rng::seed_from_u64(seed));
        (store, u)
    }

    #[test]
    fn zero_parameters_give_zero_graph() {
        let (mut store, u) = build(0);
        store.set_all(0.0);
        let (_, g) = u
            .continuous_step(&store, &UpdaterState::zeros(&small()), &[0.7; 8], &[-2.0; 8])
            .unwrap();
        assert!(g.as_slice().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn zero_weights_give_tanh_of_bias() {
        let (mut store, u) = build(0);
        store.set_all(0.0);
        store.get_mut(u.decoder_bias()).fill(0.3);
        let (_, g) = u
            .continuous_step(&store, &UpdaterState::zeros(&small()), &[1.0; 8], &[1.0; 8])
            .unwrap();
        assert!(g.as_slice().iter().all(|x| *x == 0.3f64.tanh()));
    }

    #[test]
    fn seeded_runs_are_bit_identical() {
        let run = || {
            let (store, u) = build(9);
            let mut state = UpdaterState::zeros(&small());
            let mut out = Vec::new();
            for k in 0..5 {
                let (s, g) = u
                    .continuous_step(&store, &state, &[0.1 * k as f64; 8], &[0.3; 8])
                    .unwrap();
                state = s;
                out.push(g);
            }
            out
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn wrong_width_is_rejected() {
        let (store, u) = build(0);
        let r = u.continuous_step(&store, &UpdaterState::zeros(&small()), &[0.0; 3], &[0.0; 8]);
        assert!(matches!(r, Err(NnError::DimensionMismatch { .. })));
    }
}
