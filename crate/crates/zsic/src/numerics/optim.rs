//! Named parameter groups with gradient accumulators, and Adam.

use std::collections::HashMap;

use super::matrix::Matrix;
use super::NumericsError;

/// Ordered collection of named parameter groups. Each group carries a
/// gradient accumulator of identical shape and a trainable flag.
#[derive(Clone, Debug, Default)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Matrix>,
    grads: Vec<Matrix>,
    trainable: Vec<bool>,
    index: HashMap<String, usize>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, value: Matrix, trainable: bool) -> usize {
        assert!(
            !self.index.contains_key(name),
            "duplicate parameter group {name}"
        );
        let idx = self.values.len();
        self.grads.push(Matrix::zeros(value.rows(), value.cols()));
        self.values.push(value);
        self.names.push(name.to_string());
        self.trainable.push(trainable);
        self.index.insert(name.to_string(), idx);
        idx
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name_at(&self, idx: usize) -> &str {
        &self.names[idx]
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(|s| s.as_str())
    }

    pub fn value(&self, name: &str) -> &Matrix {
        &self.values[self.expect(name)]
    }

    pub fn value_mut(&mut self, name: &str) -> &mut Matrix {
        let idx = self.expect(name);
        &mut self.values[idx]
    }

    pub fn value_at(&self, idx: usize) -> &Matrix {
        &self.values[idx]
    }

    pub fn grad(&self, name: &str) -> &Matrix {
        &self.grads[self.expect(name)]
    }

    pub fn trainable(&self, name: &str) -> bool {
        self.trainable[self.expect(name)]
    }

    pub fn trainable_at(&self, idx: usize) -> bool {
        self.trainable[idx]
    }

    pub fn set_trainable(&mut self, name: &str, trainable: bool) {
        let idx = self.expect(name);
        self.trainable[idx] = trainable;
    }

    pub fn accumulate_grad_at(&mut self, idx: usize, g: &Matrix) {
        self.grads[idx].add_assign(g);
    }

    pub fn zero_grads(&mut self) {
        for g in &mut self.grads {
            g.fill(0.0);
        }
    }

    fn expect(&self, name: &str) -> usize {
        *self
            .index
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter group {name}"))
    }
}

/// Adam moment buffers over a chosen subset of a store's groups.
#[derive(Clone, Debug)]
pub struct AdamState {
    group_ids: Vec<usize>,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
    t: u64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl AdamState {
    /// Moments for the groups whose names match the given predicate.
    pub fn new(store: &ParamStore, select: impl Fn(&str) -> bool) -> Self {
        let mut group_ids = Vec::new();
        let mut m = Vec::new();
        let mut v = Vec::new();
        for idx in 0..store.len() {
            if select(store.name_at(idx)) {
                let val = store.value_at(idx);
                group_ids.push(idx);
                m.push(Matrix::zeros(val.rows(), val.cols()));
                v.push(Matrix::zeros(val.rows(), val.cols()));
            }
        }
        AdamState {
            group_ids,
            m,
            v,
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn covers(&self, idx: usize) -> bool {
        self.group_ids.contains(&idx)
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One bias-corrected Adam update over the state's trainable groups;
/// zeroes the gradients it consumed.
pub fn adam_step(store: &mut ParamStore, state: &mut AdamState, lr: f64) -> Result<(), NumericsError> {
    if lr <= 0.0 {
        return Err(NumericsError::InvalidArg(format!(
            "learning rate must be positive, got {lr}"
        )));
    }
    state.t += 1;
    let bc1 = 1.0 - state.beta1.powi(state.t as i32);
    let bc2 = 1.0 - state.beta2.powi(state.t as i32);
    for (slot, &idx) in state.group_ids.iter().enumerate() {
        if !store.trainable_at(idx) {
            continue;
        }
        let g = store.grads[idx].clone();
        let m = &mut state.m[slot];
        let v = &mut state.v[slot];
        for (mi, gi) in m.data_mut().iter_mut().zip(g.data()) {
            *mi = state.beta1 * *mi + (1.0 - state.beta1) * gi;
        }
        for (vi, gi) in v.data_mut().iter_mut().zip(g.data()) {
            *vi = state.beta2 * *vi + (1.0 - state.beta2) * gi * gi;
        }
        let value = &mut store.values[idx];
        for ((pi, mi), vi) in value.data_mut().iter_mut().zip(m.data()).zip(v.data()) {
            let m_hat = mi / bc1;
            let v_hat = vi / bc2;
            *pi -= lr * m_hat / (v_hat.sqrt() + state.eps);
        }
        store.grads[idx].fill(0.0);
    }
    Ok(())
}
