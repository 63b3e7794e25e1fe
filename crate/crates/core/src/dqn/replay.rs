//! Bounded experience replay.

use std::collections::VecDeque;

use rand::Rng;

use crate::error::{invalid, Result};

/// One `(s, m, xi, s')` record.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

/// FIFO buffer holding at most `capacity` transitions; the oldest record
/// is evicted first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    records: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(invalid("replay_capacity", "must be >= 1"));
        }
        Ok(Self {
            capacity,
            records: VecDeque::with_capacity(capacity.min(1 << 16)),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.records.len() == self.capacity {
            self.records.pop_front();
        }
        self.records.push_back(t);
    }

    pub fn get(&self, index: usize) -> Option<&Transition> {
        self.records.get(index)
    }

    /// Indices drawn uniformly with replacement.
    pub fn sample_indices<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<usize> {
        if self.records.is_empty() {
            return Vec::new();
        }
        (0..count)
            .map(|_| rng.random_range(0..self.records.len()))
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<&Transition> {
        self.sample_indices(count, rng)
            .into_iter()
            .map(|i| &self.records[i])
            .collect()
    }
}
