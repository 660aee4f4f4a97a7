//! FIFO replay buffer shared by all operator heads. Each transition stores
//! the full reward vector and per-operator success flags.

use rand::Rng;
use thiserror::Error;

use crate::grounding::K;
use crate::sim::{ACTION_DIM, OBS_DIM};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BufferError {
    #[error("buffer holds {have} transitions, batch needs {need}")]
    Underfull { have: usize, need: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: [f64; OBS_DIM],
    pub action: [f64; ACTION_DIM],
    pub reward: [f64; K],
    pub next_obs: [f64; OBS_DIM],
    /// Operator `i` succeeded on this transition.
    pub success: [bool; K],
    pub active: u8,
}

/// Column-major batch: row `r` of each field belongs to one transition.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Batch {
    pub n: usize,
    pub obs: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: Vec<f64>,
    pub next_obs: Vec<f64>,
    pub success: Vec<bool>,
    pub active: Vec<u8>,
}

impl Batch {
    pub fn reward(&self, row: usize, op: usize) -> f64 {
        self.reward[row * K + op]
    }

    pub fn success(&self, row: usize, op: usize) -> bool {
        self.success[row * K + op]
    }

    pub fn push(&mut self, t: &Transition) {
        self.n += 1;
        self.obs.extend_from_slice(&t.obs);
        self.action.extend_from_slice(&t.action);
        self.reward.extend_from_slice(&t.reward);
        self.next_obs.extend_from_slice(&t.next_obs);
        self.success.extend_from_slice(&t.success);
        self.active.push(t.active);
    }
}

/// Storage grows lazily up to `capacity`, then the oldest entry is
/// overwritten.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        Self { capacity, items: Vec::new(), cursor: 0 }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    /// Oldest-first view of `i`.
    pub fn get(&self, i: usize) -> Option<&Transition> {
        if i >= self.items.len() {
            return None;
        }
        let start = if self.items.len() < self.capacity { 0 } else { self.cursor };
        Some(&self.items[(start + i) % self.items.len()])
    }

    pub fn sample_indices(&self, n: usize, rng: &mut impl Rng) -> Result<Vec<usize>, BufferError> {
        if self.items.len() < n {
            return Err(BufferError::Underfull { have: self.items.len(), need: n });
        }
        Ok((0..n).map(|_| rng.random_range(0..self.items.len())).collect())
    }

    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Result<Batch, BufferError> {
        let idx = self.sample_indices(n, rng)?;
        let mut b = Batch::default();
        for i in idx {
            b.push(&self.items[i]);
        }
        Ok(b)
    }
}
