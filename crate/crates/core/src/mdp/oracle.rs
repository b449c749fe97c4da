//! Exact dynamic programming on small enumerable MDPs.
//!
//! Values use the normalized convention `V = max_a (1-gamma) U + gamma E[V']`,
//! so a constant utility `c` has value `c`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const STOCHASTIC_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MdpAction {
    pub utility: f64,
    /// `(next_state, probability)` pairs.
    pub transitions: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMdp {
    /// `actions[s]` lists the actions available in state `s`; never empty.
    pub actions: Vec<Vec<MdpAction>>,
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValueIteration {
    pub values: Vec<f64>,
    pub policy: Vec<usize>,
    pub sweeps: usize,
}

impl FiniteMdp {
    pub fn new(actions: Vec<Vec<MdpAction>>, gamma: f64) -> Result<Self> {
        let mdp = Self { actions, gamma };
        mdp.validate()?;
        Ok(mdp)
    }

    pub fn num_states(&self) -> usize {
        self.actions.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma must lie in [0, 1), got {}", self.gamma)));
        }
        let n = self.num_states();
        for (s, acts) in self.actions.iter().enumerate() {
            if acts.is_empty() {
                return Err(Error::Precondition(format!("state {s} has no actions")));
            }
            for (a, act) in acts.iter().enumerate() {
                let mut sum = 0.0;
                for &(next, p) in &act.transitions {
                    if next >= n || !(0.0..=1.0).contains(&p) {
                        return Err(Error::NonStochastic { state: s, action: a, sum: f64::NAN });
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > STOCHASTIC_TOL {
                    return Err(Error::NonStochastic { state: s, action: a, sum });
                }
            }
        }
        Ok(())
    }

    fn backup(&self, act: &MdpAction, values: &[f64]) -> f64 {
        let future: f64 = act.transitions.iter().map(|&(n, p)| p * values[n]).sum();
        (1.0 - self.gamma) * act.utility + self.gamma * future
    }

    /// Iterates the Bellman optimality operator until the returned values
    /// are within `tol` of the fixed point in sup norm. Policy ties go to
    /// the lowest action index.
    pub fn value_iteration(&self, tol: f64) -> ValueIteration {
        let n = self.num_states();
        let mut values = vec![0.0; n];
        // Contraction bound: a step of size d leaves at most d*gamma/(1-gamma) to go.
        let threshold = if self.gamma == 0.0 {
            f64::INFINITY
        } else {
            tol * (1.0 - self.gamma) / self.gamma
        };
        let mut sweeps = 0;
        loop {
            sweeps += 1;
            let mut next = vec![0.0; n];
            let mut delta: f64 = 0.0;
            for s in 0..n {
                next[s] = self.actions[s]
                    .iter()
                    .map(|a| self.backup(a, &values))
                    .fold(f64::NEG_INFINITY, f64::max);
                delta = delta.max((next[s] - values[s]).abs());
            }
            values = next;
            if delta <= threshold {
                break;
            }
        }
        let policy = self.greedy_policy(&values);
        ValueIteration {
            values,
            policy,
            sweeps,
        }
    }

    pub fn greedy_policy(&self, values: &[f64]) -> Vec<usize> {
        self.actions
            .iter()
            .map(|acts| {
                let mut best = (0, f64::NEG_INFINITY);
                for (i, a) in acts.iter().enumerate() {
                    let v = self.backup(a, values);
                    if v > best.1 {
                        best = (i, v);
                    }
                }
                best.0
            })
            .collect()
    }

    /// Exact value of a deterministic policy by solving the linear system
    /// `V = (1-gamma) U_pi + gamma P_pi V`.
    pub fn evaluate_policy(&self, policy: &[usize]) -> Result<Vec<f64>> {
        let n = self.num_states();
        if policy.len() != n {
            return Err(Error::ShapeMismatch(format!("policy covers {} of {n} states", policy.len())));
        }
        let mut m = vec![vec![0.0; n + 1]; n];
        for s in 0..n {
            let act = self.actions[s]
                .get(policy[s])
                .ok_or_else(|| Error::Precondition(format!("state {s}: action {} out of range", policy[s])))?;
            m[s][s] += 1.0;
            for &(next, p) in &act.transitions {
                m[s][next] -= self.gamma * p;
            }
            m[s][n] = (1.0 - self.gamma) * act.utility;
        }
        solve_augmented(m)
    }
}

/// Gaussian elimination with partial pivoting on an `n x (n+1)` system.
fn solve_augmented(mut m: Vec<Vec<f64>>) -> Result<Vec<f64>> {
    let n = m.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .expect("non-empty range");
        if m[pivot][col].abs() < 1e-300 {
            return Err(Error::Precondition("singular policy-evaluation system".into()));
        }
        m.swap(col, pivot);
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            if factor != 0.0 {
                let (upper, lower) = m.split_at_mut(row);
                for (x, p) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                    *x -= factor * p;
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|c| m[row][c] * x[c]).sum();
        x[row] = (m[row][n] - tail) / m[row][row];
    }
    Ok(x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureAction {
    pub state: usize,
    pub utility: f64,
    pub transitions: Vec<(usize, f64)>,
}

/// TOML description of a small MDP with optional expected values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleFixture {
    pub gamma: f64,
    pub tol: f64,
    pub num_states: usize,
    pub actions: Vec<FixtureAction>,
    #[serde(default)]
    pub expected_values: Option<Vec<f64>>,
}

impl OracleFixture {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(toml::from_str(&text)?)
    }

    pub fn to_mdp(&self) -> Result<FiniteMdp> {
        let mut actions = vec![Vec::new(); self.num_states];
        for a in &self.actions {
            let slot = actions
                .get_mut(a.state)
                .ok_or_else(|| Error::Config(format!("action for state {} of {}", a.state, self.num_states)))?;
            slot.push(MdpAction {
                utility: a.utility,
                transitions: a.transitions.clone(),
            });
        }
        FiniteMdp::new(actions, self.gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(utility: f64, next: usize) -> MdpAction {
        MdpAction {
            utility,
            transitions: vec![(next, 1.0)],
        }
    }

    #[test]
    fn single_state_value_is_the_utility() {
        let mdp = FiniteMdp::new(vec![vec![det(3.5, 0)]], 0.9).unwrap();
        let vi = mdp.value_iteration(1e-10);
        assert!((vi.values[0] - 3.5).abs() <= 1e-10);
    }

    #[test]
    fn two_state_chain_closed_form() {
        // s0 -> s1 (u=1), s1 -> s0 (u=0) or s1 -> s1 (u=0.4).
        // Staying: V1 = 0.4. Cycling: V0 = 0.1 + 0.9 V1, V1 = 0.9 V0 gives V0 = 0.1/0.19.
        let gamma = 0.9;
        let mdp = FiniteMdp::new(vec![vec![det(1.0, 1)], vec![det(0.0, 0), det(0.4, 1)]], gamma).unwrap();
        let vi = mdp.value_iteration(1e-12);
        let v0_cycle = 0.1 / 0.19;
        let v1_cycle = 0.9 * v0_cycle;
        assert!(v1_cycle > 0.4);
        assert_eq!(vi.policy, vec![0, 0]);
        assert!((vi.values[0] - v0_cycle).abs() <= 1e-12);
        assert!((vi.values[1] - v1_cycle).abs() <= 1e-12);
        let exact = mdp.evaluate_policy(&[0, 1]).unwrap();
        assert!((exact[1] - 0.4).abs() < 1e-12);
        assert!((exact[0] - (0.1 + 0.9 * 0.4)).abs() < 1e-12);
    }

    #[test]
    fn myopic_value_is_best_utility() {
        let mdp = FiniteMdp::new(vec![vec![det(1.0, 1), det(2.0, 0)], vec![det(0.5, 0)]], 0.0).unwrap();
        let vi = mdp.value_iteration(1e-12);
        assert_eq!(vi.values, vec![2.0, 0.5]);
        assert_eq!(vi.policy, vec![1, 0]);
    }

    #[test]
    fn non_stochastic_rows_are_rejected() {
        let bad = MdpAction {
            utility: 0.0,
            transitions: vec![(0, 0.5), (0, 0.4)],
        };
        assert!(matches!(
            FiniteMdp::new(vec![vec![bad]], 0.9),
            Err(Error::NonStochastic { state: 0, action: 0, .. })
        ));
    }

    #[test]
    fn fixture_parses() {
        let text = r#"
gamma = 0.5
tol = 1e-12
num_states = 2
expected_values = [1.0, 1.0]

[[actions]]
state = 0
utility = 1.0
transitions = [[1, 1.0]]

[[actions]]
state = 1
utility = 1.0
transitions = [[0, 0.5], [1, 0.5]]
"#;
        let fx: OracleFixture = toml::from_str(text).unwrap();
        let vi = fx.to_mdp().unwrap().value_iteration(fx.tol);
        assert!(vi.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }
}
