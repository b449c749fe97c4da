use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

/// Tabular action values with per-entry visit counts. Unseen entries read as zero.
#[derive(Clone, Debug)]
pub struct QTable<S, A> {
    entries: HashMap<(S, A), Entry>,
}

#[derive(Clone, Copy, Debug, Default)]
struct Entry {
    value: f64,
    visits: u64,
}

impl<S, A> Default for QTable<S, A> {
    fn default() -> Self {
        Self {
            entries: HashMap::new(),
        }
    }
}

/// Discount and schedules for tabular learning.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnCfg {
    pub gamma: f64,
    /// Exploration rate at the start and its floor.
    pub eps_start: f64,
    pub eps_end: f64,
    /// Steps over which exploration decays linearly to the floor.
    pub eps_decay_steps: u64,
}

impl Default for LearnCfg {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            eps_start: 1.0,
            eps_end: 0.01,
            eps_decay_steps: 100_000,
        }
    }
}

impl LearnCfg {
    /// Step size after `visits` visits, counting the current one: `1 / (1 + visits)`.
    pub fn alpha(visits: u64) -> f64 {
        1.0 / (1.0 + visits as f64)
    }

    pub fn epsilon(&self, step: u64) -> f64 {
        if step >= self.eps_decay_steps {
            return self.eps_end;
        }
        let frac = step as f64 / self.eps_decay_steps as f64;
        self.eps_start + (self.eps_end - self.eps_start) * frac
    }
}

impl<S: Hash + Eq + Clone, A: Hash + Eq + Clone> QTable<S, A> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(&self, s: &S, a: &A) -> f64 {
        self.entries
            .get(&(s.clone(), a.clone()))
            .map_or(0.0, |e| e.value)
    }

    pub fn visits(&self, s: &S, a: &A) -> u64 {
        self.entries
            .get(&(s.clone(), a.clone()))
            .map_or(0, |e| e.visits)
    }

    pub fn set(&mut self, s: S, a: A, value: f64) {
        self.entries.entry((s, a)).or_default().value = value;
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Counts a visit to `(s, a)` and returns the step size for it.
    pub fn visit(&mut self, s: &S, a: &A) -> f64 {
        let e = self.entries.entry((s.clone(), a.clone())).or_default();
        e.visits += 1;
        LearnCfg::alpha(e.visits)
    }

    /// On-policy update `Q(s,a) <- (1-alpha) Q(s,a) + alpha ((1-gamma) u + gamma Q(s',a'))`.
    #[allow(clippy::too_many_arguments)]
    pub fn sarsa_update(&mut self, s: &S, a: &A, u: f64, next_s: &S, next_a: &A, alpha: f64, gamma: f64) {
        let target = (1.0 - gamma) * u + gamma * self.value(next_s, next_a);
        let e = self.entries.entry((s.clone(), a.clone())).or_default();
        e.value = (1.0 - alpha) * e.value + alpha * target;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn update_examples() {
        let mut q: QTable<u8, u8> = QTable::new();
        q.sarsa_update(&0, &0, 0.0, &1, &0, 0.5, 0.9);
        assert_eq!(q.value(&0, &0), 0.0);
        q.sarsa_update(&0, &0, 1.0, &1, &0, 0.5, 0.9);
        assert!((q.value(&0, &0) - 0.05).abs() < 1e-15);
        q.sarsa_update(&0, &0, 100.0, &1, &0, 0.0, 0.9);
        assert!((q.value(&0, &0) - 0.05).abs() < 1e-15);
        q.sarsa_update(&1, &1, 3.0, &0, &0, 1.0, 0.0);
        assert_eq!(q.value(&1, &1), 3.0);
    }

    #[test]
    fn visits_drive_alpha() {
        let mut q: QTable<u8, u8> = QTable::new();
        assert_eq!(q.visit(&2, &1), 0.5);
        assert_eq!(q.visit(&2, &1), 1.0 / 3.0);
        assert_eq!(q.visits(&2, &1), 2);
    }

    #[test]
    fn epsilon_schedule() {
        let cfg = LearnCfg { eps_decay_steps: 10, ..LearnCfg::default() };
        assert_eq!(cfg.epsilon(0), 1.0);
        assert!((cfg.epsilon(5) - 0.505).abs() < 1e-12);
        assert_eq!(cfg.epsilon(10), 0.01);
        assert_eq!(cfg.epsilon(1000), 0.01);
    }
}
