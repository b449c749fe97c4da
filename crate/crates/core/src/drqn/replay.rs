use std::collections::VecDeque;

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};

/// One slot transition for every pair. Each pair stores `steps + 1`
/// consecutive feature vectors: the first `steps` form its window before the
/// transition, the last `steps` its window after.
#[derive(Clone, Debug, PartialEq)]
pub struct Experience {
    pub num_pairs: usize,
    pub steps: usize,
    pub features: usize,
    /// Row-major `[pair][time][feature]`, `time` in `0..=steps`.
    pub windows: Vec<f64>,
    pub actions: Vec<usize>,
    pub utilities: Vec<f64>,
    pub next_actions: Vec<usize>,
}

impl Experience {
    fn pair_block(&self, k: usize) -> &[f64] {
        let len = (self.steps + 1) * self.features;
        &self.windows[k * len..(k + 1) * len]
    }

    /// Pair `k`'s window before the transition.
    pub fn window(&self, k: usize) -> &[f64] {
        &self.pair_block(k)[..self.steps * self.features]
    }

    /// Pair `k`'s window after the transition.
    pub fn next_window(&self, k: usize) -> &[f64] {
        &self.pair_block(k)[self.features..]
    }
}

/// Stacks flat `[time][feature]` windows into per-time batch matrices.
pub fn batch_steps(windows: &[&[f64]], steps: usize, features: usize) -> Vec<Array2<f64>> {
    (0..steps)
        .map(|t| {
            let mut m = Array2::<f64>::zeros((windows.len(), features));
            for (b, w) in windows.iter().enumerate() {
                m.row_mut(b)
                    .as_slice_mut()
                    .expect("standard layout")
                    .copy_from_slice(&w[t * features..(t + 1) * features]);
            }
            m
        })
        .collect()
}

/// Bounded FIFO of experiences.
#[derive(Clone, Debug)]
pub struct ReplayMemory {
    capacity: usize,
    items: VecDeque<Experience>,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: VecDeque::with_capacity(capacity.min(1 << 16)),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&Experience> {
        self.items.get(index)
    }

    pub fn push(&mut self, e: Experience) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(e);
    }

    /// Indices of `m` distinct stored experiences, drawn uniformly.
    pub fn sample_indices<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Result<Vec<usize>> {
        if m > self.items.len() {
            return Err(Error::UnderfilledMemory { have: self.items.len(), need: m });
        }
        Ok(rand::seq::index::sample(rng, self.items.len(), m).into_vec())
    }

    pub fn sample<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Result<Vec<&Experience>> {
        Ok(self
            .sample_indices(m, rng)?
            .into_iter()
            .map(|i| &self.items[i])
            .collect())
    }
}

/// The most recent `steps` feature vectors of every pair.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationPool {
    steps: usize,
    features: usize,
    windows: Vec<VecDeque<Vec<f64>>>,
}

impl ObservationPool {
    /// Every window is front-padded with the pair's first observation.
    pub fn new(initial: &[Vec<f64>], steps: usize) -> Self {
        assert!(steps > 0, "window length must be positive");
        let features = initial.first().map_or(0, |v| v.len());
        let windows = initial
            .iter()
            .map(|f| std::iter::repeat_n(f.clone(), steps).collect())
            .collect();
        Self { steps, features, windows }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn num_pairs(&self) -> usize {
        self.windows.len()
    }

    pub fn push(&mut self, k: usize, features: Vec<f64>) {
        let w = &mut self.windows[k];
        w.pop_front();
        w.push_back(features);
    }

    pub fn window_len(&self, k: usize) -> usize {
        self.windows[k].len()
    }

    /// Pair `k`'s window, flattened oldest first.
    pub fn flat_window(&self, k: usize) -> Vec<f64> {
        self.windows[k].iter().flatten().copied().collect()
    }

    /// Pair `k`'s window followed by `next`, flattened.
    pub fn flat_window_with(&self, k: usize, next: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity((self.steps + 1) * self.features);
        out.extend(self.windows[k].iter().flatten());
        out.extend_from_slice(next);
        out
    }

    /// Batch of all current windows, one row per pair.
    pub fn batch(&self) -> Vec<Array2<f64>> {
        let flats: Vec<Vec<f64>> = (0..self.num_pairs()).map(|k| self.flat_window(k)).collect();
        let refs: Vec<&[f64]> = flats.iter().map(|v| v.as_slice()).collect();
        batch_steps(&refs, self.steps, self.features)
    }
}
