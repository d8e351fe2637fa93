//! Tape-based reverse-mode differentiation over [`Matrix`] values.
//!
//! A [`Tape`] borrows a [`ParamStore`], records every operation of one
//! forward pass, and [`Tape::backward`] accumulates parameter gradients into
//! a [`Gradients`] buffer.

use std::collections::HashMap;

use crate::matrix::{dot, Matrix};
use crate::params::{Gradients, ParamId, ParamStore};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Clone, Debug)]
enum Op {
    Const,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddBroadcast(Var, Var),
    MulBroadcast(Var, Var),
    Affine(Var, f64),
    Tanh(Var),
    Sigmoid(Var),
    Relu(Var),
    Transpose(Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    Gather(Var, Vec<usize>),
    Overwrite(Var, Vec<usize>),
    MeanRows(Var),
    SumAll(Var),
    SoftmaxRows(Var),
    EmbedBag(ParamId, Vec<Vec<usize>>),
    CrossEntropy(Var, usize),
}

struct Node {
    value: Option<Matrix>,
    op: Op,
}

pub struct Tape<'s> {
    store: &'s ParamStore,
    nodes: Vec<Node>,
    params: HashMap<ParamId, Var>,
}

/// Broadcast `b` against an `m × n` shape: full, row `1×n`, column `m×1` or scalar.
fn broadcast_index(b: &Matrix, i: usize, j: usize) -> f64 {
    let (r, c) = b.shape();
    b.get(if r == 1 { 0 } else { i }, if c == 1 { 0 } else { j })
}

fn broadcastable(a: (usize, usize), b: (usize, usize)) -> bool {
    (b.0 == a.0 || b.0 == 1) && (b.1 == a.1 || b.1 == 1)
}

/// Sums `g` down to the broadcast shape `shape`.
fn reduce_to(g: &Matrix, shape: (usize, usize)) -> Matrix {
    if g.shape() == shape {
        return g.clone();
    }
    let mut out = Matrix::zeros(shape.0, shape.1);
    for i in 0..g.rows() {
        for j in 0..g.cols() {
            let (oi, oj) = (if shape.0 == 1 { 0 } else { i }, if shape.1 == 1 { 0 } else { j });
            out.set(oi, oj, out.get(oi, oj) + g.get(i, j));
        }
    }
    out
}

fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in row.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in row.iter_mut() {
        *x /= sum;
    }
}

/// Numerically stable softmax of a slice.
pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let mut out = xs.to_vec();
    if !out.is_empty() {
        softmax_in_place(&mut out);
    }
    out
}

impl<'s> Tape<'s> {
    pub fn new(store: &'s ParamStore) -> Self {
        Tape {
            store,
            nodes: Vec::new(),
            params: HashMap::new(),
        }
    }

    pub fn store(&self) -> &'s ParamStore {
        self.store
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Matrix, op: Op) -> Var {
        self.nodes.push(Node { value: Some(value), op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        match (&self.nodes[v.0].value, &self.nodes[v.0].op) {
            (Some(m), _) => m,
            (None, Op::Param(id)) => self.store.get(*id),
            _ => unreachable!("only parameter nodes borrow their value"),
        }
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.value(v).shape()
    }

    pub fn constant(&mut self, m: Matrix) -> Var {
        self.push(m, Op::Const)
    }

    /// The parameter as a variable; repeated calls share one node.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.params.get(&id) {
            return *v;
        }
        self.nodes.push(Node {
            value: None,
            op: Op::Param(id),
        });
        let v = Var(self.nodes.len() - 1);
        self.params.insert(id, v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let out = self.value(a).matmul(self.value(b));
        self.push(out, Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let out = self.value(a).zip(self.value(b), |x, y| x + y);
        self.push(out, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let out = self.value(a).zip(self.value(b), |x, y| x - y);
        self.push(out, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let out = self.value(a).zip(self.value(b), |x, y| x * y);
        self.push(out, Op::Mul(a, b))
    }

    /// `a + b` with `b` broadcast over rows and/or columns.
    pub fn add_broadcast(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        assert!(broadcastable(av.shape(), bv.shape()), "add_broadcast shapes");
        let mut out = av.clone();
        for i in 0..out.rows() {
            for j in 0..out.cols() {
                out.set(i, j, out.get(i, j) + broadcast_index(bv, i, j));
            }
        }
        self.push(out, Op::AddBroadcast(a, b))
    }

    /// `a ∘ b` with `b` broadcast over rows and/or columns.
    pub fn mul_broadcast(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        assert!(broadcastable(av.shape(), bv.shape()), "mul_broadcast shapes");
        let mut out = av.clone();
        for i in 0..out.rows() {
            for j in 0..out.cols() {
                out.set(i, j, out.get(i, j) * broadcast_index(bv, i, j));
            }
        }
        self.push(out, Op::MulBroadcast(a, b))
    }

    /// `alpha · a + beta`
    pub fn affine(&mut self, a: Var, alpha: f64, beta: f64) -> Var {
        let out = self.value(a).map(|x| alpha * x + beta);
        self.push(out, Op::Affine(a, alpha))
    }

    pub fn scale(&mut self, a: Var, alpha: f64) -> Var {
        self.affine(a, alpha, 0.0)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).map(f64::tanh);
        self.push(out, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| 1.0 / (1.0 + (-x).exp()));
        self.push(out, Op::Sigmoid(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| x.max(0.0));
        self.push(out, Op::Relu(a))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let out = self.value(a).transpose();
        self.push(out, Op::Transpose(a))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let rows = self.value(parts[0]).rows();
        let cols: usize = parts.iter().map(|p| self.value(*p).cols()).sum();
        let mut out = Matrix::zeros(rows, cols);
        let mut offset = 0;
        for p in parts {
            let v = self.value(*p);
            assert_eq!(v.rows(), rows, "concat_cols rows");
            for i in 0..rows {
                out.row_mut(i)[offset..offset + v.cols()].copy_from_slice(v.row(i));
            }
            offset += v.cols();
        }
        self.push(out, Op::ConcatCols(parts.to_vec()))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        let cols = self.value(parts[0]).cols();
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            let v = self.value(*p);
            assert_eq!(v.cols(), cols, "concat_rows cols");
            data.extend_from_slice(v.as_slice());
            rows += v.rows();
        }
        self.push(Matrix::from_vec(rows, cols, data), Op::ConcatRows(parts.to_vec()))
    }

    /// `rows × cols` matrix whose k-th flat entry is `src.flat[indices[k]]`.
    /// Covers reshapes, slices and transposed views.
    pub fn gather(&mut self, src: Var, indices: Vec<usize>, rows: usize, cols: usize) -> Var {
        assert_eq!(indices.len(), rows * cols, "gather shape");
        let s = self.value(src).as_slice();
        let data = indices.iter().map(|&k| s[k]).collect();
        self.push(Matrix::from_vec(rows, cols, data), Op::Gather(src, indices))
    }

    /// Columns `start..start + len` of `src`.
    pub fn slice_cols(&mut self, src: Var, start: usize, len: usize) -> Var {
        let (rows, cols) = self.shape(src);
        assert!(start + len <= cols, "slice_cols range");
        let indices = (0..rows)
            .flat_map(|i| (start..start + len).map(move |j| i * cols + j))
            .collect();
        self.gather(src, indices, rows, len)
    }

    /// `src` with flat entries replaced; no gradient flows to replaced entries.
    pub fn overwrite(&mut self, src: Var, entries: &[(usize, f64)]) -> Var {
        let mut out = self.value(src).clone();
        for &(k, v) in entries {
            out.as_mut_slice()[k] = v;
        }
        let positions = entries.iter().map(|e| e.0).collect();
        self.push(out, Op::Overwrite(src, positions))
    }

    /// Column means as a `1 × cols` row; zeros for an empty matrix.
    pub fn mean_rows(&mut self, a: Var) -> Var {
        let v = self.value(a);
        let mut out = Matrix::zeros(1, v.cols());
        if v.rows() > 0 {
            for i in 0..v.rows() {
                for (o, x) in out.as_mut_slice().iter_mut().zip(v.row(i)) {
                    *o += x;
                }
            }
            out.scale_assign(1.0 / v.rows() as f64);
        }
        self.push(out, Op::MeanRows(a))
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let s = self.value(a).sum();
        self.push(Matrix::from_vec(1, 1, vec![s]), Op::SumAll(a))
    }

    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let mut out = self.value(a).clone();
        for i in 0..out.rows() {
            if out.cols() > 0 {
                softmax_in_place(out.row_mut(i));
            }
        }
        self.push(out, Op::SoftmaxRows(a))
    }

    /// One row per bag: the mean of the table rows it lists (zeros if empty).
    pub fn embed_bag(&mut self, table: ParamId, bags: Vec<Vec<usize>>) -> Var {
        let t = self.store.get(table);
        let mut out = Matrix::zeros(bags.len(), t.cols());
        for (i, bag) in bags.iter().enumerate() {
            if bag.is_empty() {
                continue;
            }
            let w = 1.0 / bag.len() as f64;
            let row = out.row_mut(i);
            for &k in bag {
                for (o, x) in row.iter_mut().zip(t.row(k)) {
                    *o += w * x;
                }
            }
        }
        self.push(out, Op::EmbedBag(table, bags))
    }

    /// `-log softmax(logits)[target]` for a `1 × K` logit row.
    pub fn cross_entropy(&mut self, logits: Var, target: usize) -> Var {
        let l = self.value(logits).as_slice();
        assert!(target < l.len(), "cross_entropy target");
        let max = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + l.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
        let loss = lse - l[target];
        self.push(Matrix::from_vec(1, 1, vec![loss]), Op::CrossEntropy(logits, target))
    }

    /// Rows of `table` read by embedding lookups on this tape.
    pub fn embedded_rows(&self, table: ParamId) -> std::collections::BTreeSet<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match &n.op {
                Op::EmbedBag(t, bags) if *t == table => Some(bags),
                _ => None,
            })
            .flatten()
            .flatten()
            .copied()
            .collect()
    }

    /// Accumulates d`loss`/dθ into `grads` (added, not overwritten).
    ///
    /// # Panics
    /// If `loss` is not `1 × 1`.
    pub fn backward(&self, loss: Var, grads: &mut Gradients) {
        assert_eq!(self.shape(loss), (1, 1), "loss must be scalar");
        let mut g: Vec<Option<Matrix>> = vec![None; loss.0 + 1];
        g[loss.0] = Some(Matrix::filled(1, 1, 1.0));

        fn acc(g: &mut [Option<Matrix>], v: Var, delta: Matrix) {
            match &mut g[v.0] {
                Some(m) => m.add_assign(&delta),
                slot => *slot = Some(delta),
            }
        }

        for i in (0..=loss.0).rev() {
            let Some(gi) = g[i].take() else { continue };
            let y = &self.nodes[i];
            match &y.op {
                Op::Const => {}
                Op::Param(id) => grads.get_mut(*id).add_assign(&gi),
                Op::MatMul(a, b) => {
                    acc(&mut g, *a, gi.matmul_nt(self.value(*b)));
                    acc(&mut g, *b, self.value(*a).matmul_tn(&gi));
                }
                Op::Add(a, b) => {
                    acc(&mut g, *a, gi.clone());
                    acc(&mut g, *b, gi);
                }
                Op::Sub(a, b) => {
                    acc(&mut g, *a, gi.clone());
                    acc(&mut g, *b, gi.map(|x| -x));
                }
                Op::Mul(a, b) => {
                    acc(&mut g, *a, gi.zip(self.value(*b), |x, y| x * y));
                    acc(&mut g, *b, gi.zip(self.value(*a), |x, y| x * y));
                }
                Op::AddBroadcast(a, b) => {
                    let bs = self.shape(*b);
                    acc(&mut g, *b, reduce_to(&gi, bs));
                    acc(&mut g, *a, gi);
                }
                Op::MulBroadcast(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let mut ga = gi.clone();
                    let mut gab = gi;
                    for r in 0..ga.rows() {
                        for c in 0..ga.cols() {
                            ga.set(r, c, ga.get(r, c) * broadcast_index(bv, r, c));
                            gab.set(r, c, gab.get(r, c) * av.get(r, c));
                        }
                    }
                    acc(&mut g, *b, reduce_to(&gab, bv.shape()));
                    acc(&mut g, *a, ga);
                }
                Op::Affine(a, alpha) => acc(&mut g, *a, gi.map(|x| alpha * x)),
                Op::Tanh(a) => {
                    let out = y.value.as_ref().expect("computed");
                    acc(&mut g, *a, gi.zip(out, |d, t| d * (1.0 - t * t)));
                }
                Op::Sigmoid(a) => {
                    let out = y.value.as_ref().expect("computed");
                    acc(&mut g, *a, gi.zip(out, |d, s| d * s * (1.0 - s)));
                }
                Op::Relu(a) => {
                    let out = y.value.as_ref().expect("computed");
                    acc(&mut g, *a, gi.zip(out, |d, r| if r > 0.0 { d } else { 0.0 }));
                }
                Op::Transpose(a) => acc(&mut g, *a, gi.transpose()),
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let cols = self.value(*p).cols();
                        let mut part = Matrix::zeros(gi.rows(), cols);
                        for r in 0..gi.rows() {
                            part.row_mut(r).copy_from_slice(&gi.row(r)[offset..offset + cols]);
                        }
                        offset += cols;
                        acc(&mut g, *p, part);
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let (rows, cols) = self.shape(*p);
                        let n = rows * cols;
                        let part = Matrix::from_vec(rows, cols, gi.as_slice()[offset..offset + n].to_vec());
                        offset += n;
                        acc(&mut g, *p, part);
                    }
                }
                Op::Gather(src, indices) => {
                    let (rows, cols) = self.shape(*src);
                    let mut gs = Matrix::zeros(rows, cols);
                    let s = gs.as_mut_slice();
                    for (k, &idx) in indices.iter().enumerate() {
                        s[idx] += gi.as_slice()[k];
                    }
                    acc(&mut g, *src, gs);
                }
                Op::Overwrite(src, positions) => {
                    let mut gs = gi;
                    for &k in positions {
                        gs.as_mut_slice()[k] = 0.0;
                    }
                    acc(&mut g, *src, gs);
                }
                Op::MeanRows(a) => {
                    let (rows, cols) = self.shape(*a);
                    if rows > 0 {
                        let w = 1.0 / rows as f64;
                        let mut ga = Matrix::zeros(rows, cols);
                        for r in 0..rows {
                            for (o, x) in ga.row_mut(r).iter_mut().zip(gi.as_slice()) {
                                *o = w * x;
                            }
                        }
                        acc(&mut g, *a, ga);
                    }
                }
                Op::SumAll(a) => {
                    let (rows, cols) = self.shape(*a);
                    acc(&mut g, *a, Matrix::filled(rows, cols, gi.get(0, 0)));
                }
                Op::SoftmaxRows(a) => {
                    let out = y.value.as_ref().expect("computed");
                    let mut ga = Matrix::zeros(out.rows(), out.cols());
                    for r in 0..out.rows() {
                        let (yr, gr) = (out.row(r), gi.row(r));
                        let inner = dot(yr, gr);
                        for (k, o) in ga.row_mut(r).iter_mut().enumerate() {
                            *o = yr[k] * (gr[k] - inner);
                        }
                    }
                    acc(&mut g, *a, ga);
                }
                Op::EmbedBag(table, bags) => {
                    let gt = grads.get_mut(*table);
                    for (r, bag) in bags.iter().enumerate() {
                        if bag.is_empty() {
                            continue;
                        }
                        let w = 1.0 / bag.len() as f64;
                        for &k in bag {
                            for (o, x) in gt.row_mut(k).iter_mut().zip(gi.row(r)) {
                                *o += w * x;
                            }
                        }
                    }
                }
                Op::CrossEntropy(logits, target) => {
                    let mut p = self.value(*logits).clone();
                    softmax_in_place(p.as_mut_slice());
                    p.as_mut_slice()[*target] -= 1.0;
                    let d = gi.get(0, 0);
                    p.scale_assign(d);
                    acc(&mut g, *logits, p);
                }
            }
        }
    }
}
