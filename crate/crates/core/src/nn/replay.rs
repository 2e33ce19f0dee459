use rand::seq::index;
use rand::Rng;

use crate::{Error, Result};

/// Default replay capacity.
pub const DEFAULT_CAPACITY: usize = 1024;

/// A (normalized channel state, best placement) training pair. Labels are
/// 0.0 or 1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub state: Vec<f64>,
    pub label: Vec<f64>,
}

/// Bounded FIFO of experiences; a full memory overwrites its oldest entry.
#[derive(Debug, Clone)]
pub struct ReplayMemory {
    capacity: usize,
    entries: Vec<Experience>,
    cursor: usize,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Argument("replay capacity must be positive".into()));
        }
        Ok(Self {
            capacity,
            entries: Vec::with_capacity(capacity),
            cursor: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, state: Vec<f64>, label: Vec<f64>) {
        let e = Experience { state, label };
        if self.entries.len() < self.capacity {
            self.entries.push(e);
        } else {
            self.entries[self.cursor] = e;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    /// Entries from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        let split = if self.entries.len() < self.capacity { 0 } else { self.cursor };
        self.entries[split..].iter().chain(&self.entries[..split])
    }

    /// Uniform batch: distinct entries when the memory holds at least
    /// `batch_size` of them, otherwise draws with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Result<Vec<&Experience>> {
        if self.entries.is_empty() {
            return Err(Error::State("cannot sample from an empty replay memory".into()));
        }
        let len = self.entries.len();
        Ok(if len >= batch_size {
            index::sample(rng, len, batch_size)
                .into_iter()
                .map(|i| &self.entries[i])
                .collect()
        } else {
            (0..batch_size)
                .map(|_| &self.entries[rng.random_range(0..len)])
                .collect()
        })
    }
}
