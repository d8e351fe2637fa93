//! Named parameter tensors, gradient buffers and the Adam optimizer.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ParamId(pub usize);

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Matrix>,
    index: BTreeMap<String, ParamId>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// # Panics
    /// On a duplicate name; parameter layouts are fixed by code.
    pub fn add(&mut self, name: impl Into<String>, value: Matrix) -> ParamId {
        let name = name.into();
        assert!(!self.index.contains_key(&name), "duplicate parameter {name}");
        let id = ParamId(self.values.len());
        self.index.insert(name.clone(), id);
        self.names.push(name);
        self.values.push(value);
        id
    }

    /// Xavier-uniform initialized `rows × cols` parameter.
    pub fn xavier<R: Rng>(&mut self, name: impl Into<String>, rows: usize, cols: usize, rng: &mut R) -> ParamId {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        let data = (0..rows * cols).map(|_| rng.gen_range(-bound..bound)).collect();
        self.add(name, Matrix::from_vec(rows, cols, data))
    }

    pub fn uniform<R: Rng>(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        bound: f64,
        rng: &mut R,
    ) -> ParamId {
        let data = (0..rows * cols).map(|_| rng.gen_range(-bound..bound)).collect();
        self.add(name, Matrix::from_vec(rows, cols, data))
    }

    pub fn zeros(&mut self, name: impl Into<String>, rows: usize, cols: usize) -> ParamId {
        self.add(name, Matrix::zeros(rows, cols))
    }

    pub fn get(&self, id: ParamId) -> &Matrix {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Matrix {
        &mut self.values[id.0]
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    /// Total number of scalars.
    pub fn scalar_count(&self) -> usize {
        self.values.iter().map(Matrix::len).sum()
    }

    /// Scalars in parameters whose name starts with `prefix`.
    pub fn scalar_count_with_prefix(&self, prefix: &str) -> usize {
        self.names
            .iter()
            .zip(&self.values)
            .filter(|(n, _)| n.starts_with(prefix))
            .map(|(_, v)| v.len())
            .sum()
    }

    pub fn set_all(&mut self, value: f64) {
        for v in &mut self.values {
            v.fill(value);
        }
    }
}

/// Dense gradient buffers aligned with a [`ParamStore`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    mats: Vec<Matrix>,
}

impl Gradients {
    pub fn zeros_like(store: &ParamStore) -> Self {
        Gradients {
            mats: store.values.iter().map(|m| Matrix::zeros(m.rows(), m.cols())).collect(),
        }
    }

    pub fn get(&self, id: ParamId) -> &Matrix {
        &self.mats[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Matrix {
        &mut self.mats[id.0]
    }

    pub fn zero(&mut self) {
        for m in &mut self.mats {
            m.fill(0.0);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for m in &mut self.mats {
            m.scale_assign(s);
        }
    }

    pub fn global_norm(&self) -> f64 {
        self.mats
            .iter()
            .flat_map(|m| m.as_slice())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.mats.iter().all(Matrix::is_finite)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Global-norm gradient clip; non-positive disables clipping.
    pub clip: f64,
    /// Decoupled weight decay, applied as `w -= lr · decay · w`.
    #[serde(default)]
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            clip: 5.0,
            weight_decay: 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Adam {
    config: AdamConfig,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
    t: u64,
}

impl Adam {
    pub fn new(store: &ParamStore, config: AdamConfig) -> Self {
        let zeros = Gradients::zeros_like(store).mats;
        Adam {
            config,
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.config.lr = lr;
    }

    pub fn step(&mut self, store: &mut ParamStore, grads: &Gradients) {
        let c = self.config;
        self.t += 1;
        let norm = grads.global_norm();
        let clip = if c.clip > 0.0 && norm > c.clip {
            c.clip / norm
        } else {
            1.0
        };
        let bc1 = 1.0 - c.beta1.powi(self.t as i32);
        let bc2 = 1.0 - c.beta2.powi(self.t as i32);
        for (i, value) in store.values.iter_mut().enumerate() {
            let g = grads.mats[i].as_slice();
            let m = self.m[i].as_mut_slice();
            let v = self.v[i].as_mut_slice();
            for (k, w) in value.as_mut_slice().iter_mut().enumerate() {
                let gk = g[k] * clip;
                m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * gk;
                v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * gk * gk;
                *w -= c.lr * ((m[k] / bc1) / ((v[k] / bc2).sqrt() + c.eps) + c.weight_decay * *w);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adam_descends_a_quadratic() {
        let mut store = ParamStore::new();
        let id = store.add("x", Matrix::row_vector(vec![3.0, -2.0]));
        let mut adam = Adam::new(
            &store,
            AdamConfig {
                lr: 0.1,
                ..Default::default()
            },
        );
        let mut grads = Gradients::zeros_like(&store);
        for _ in 0..500 {
            grads.zero();
            let x = store.get(id).clone();
            *grads.get_mut(id) = x.map(|v| 2.0 * v);
            adam.step(&mut store, &grads);
        }
        assert!(store.get(id).max_abs() < 1e-2);
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let mut store = ParamStore::new();
        let id = store.add("x", Matrix::row_vector(vec![1.5]));
        let mut adam = Adam::new(
            &store,
            AdamConfig {
                lr: 0.0,
                ..Default::default()
            },
        );
        let mut grads = Gradients::zeros_like(&store);
        grads.get_mut(id).set(0, 0, 4.0);
        adam.step(&mut store, &grads);
        assert_eq!(store.get(id).get(0, 0), 1.5);
    }
}
