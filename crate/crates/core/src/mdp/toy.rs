//! A two-pair, one-band instance small enough to enumerate.
//!
//! Each pair's local state is `(position, arrivals, aoi)` with two positions
//! (near and far receivers), arrivals in `{0, 1}` and AoI in `1..=3`, giving
//! 12 local and 144 joint states. Positions follow a sticky Markov chain,
//! arrivals are i.i.d. truncated Poisson, AoI follows the usual reset rule.
//! Pairs evolve independently given the joint action.

use rand::Rng;

use super::{Action, FiniteMdp, MdpAction, UtilityWeights};
use crate::error::Result;
use crate::phy::{self, PhyParams};

pub const NUM_PAIRS: usize = 2;
const POSITIONS: usize = 2;
const X_MAX: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct ToyConfig {
    pub stay_prob: f64,
    /// Channel gain at each position.
    pub gains: [f64; POSITIONS],
    pub lambda: f64,
    pub a_max: u32,
    pub gamma: f64,
    pub weights: UtilityWeights,
    pub phy: PhyParams,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            stay_prob: 0.7,
            // Sending one packet costs about 0.01 W near and 1.5 W far.
            gains: [5e-13, 3.3e-15],
            lambda: 1.0,
            a_max: 3,
            gamma: 0.9,
            weights: UtilityWeights::default(),
            phy: PhyParams::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LocalState {
    pub position: usize,
    pub arrivals: u32,
    pub aoi: u32,
}

#[derive(Clone, Debug)]
pub struct ToyMdp {
    pub cfg: ToyConfig,
    arrival_pmf: Vec<f64>,
    /// `joint_actions[s]` enumerates feasible joint actions of state `s`.
    joint_actions: Vec<Vec<[Action; NUM_PAIRS]>>,
}

impl ToyMdp {
    pub fn new(cfg: ToyConfig) -> Self {
        let arrival_pmf = phy::arrival_pmf(cfg.lambda, X_MAX);
        let mut toy = Self {
            cfg,
            arrival_pmf,
            joint_actions: Vec::new(),
        };
        toy.joint_actions = (0..toy.num_states()).map(|s| toy.enumerate_actions(s)).collect();
        toy
    }

    pub fn num_local_states(&self) -> usize {
        POSITIONS * (X_MAX as usize + 1) * self.cfg.a_max as usize
    }

    pub fn num_states(&self) -> usize {
        self.num_local_states().pow(NUM_PAIRS as u32)
    }

    pub fn local(&self, index: usize) -> LocalState {
        let a_max = self.cfg.a_max as usize;
        LocalState {
            position: index / ((X_MAX as usize + 1) * a_max),
            arrivals: ((index / a_max) % (X_MAX as usize + 1)) as u32,
            aoi: (index % a_max) as u32 + 1,
        }
    }

    pub fn local_index(&self, l: LocalState) -> usize {
        let a_max = self.cfg.a_max as usize;
        (l.position * (X_MAX as usize + 1) + l.arrivals as usize) * a_max + (l.aoi as usize - 1)
    }

    pub fn split(&self, s: usize) -> [LocalState; NUM_PAIRS] {
        let n = self.num_local_states();
        [self.local(s / n), self.local(s % n)]
    }

    pub fn join(&self, locals: [LocalState; NUM_PAIRS]) -> usize {
        self.local_index(locals[0]) * self.num_local_states() + self.local_index(locals[1])
    }

    /// `min(X, R_max)` for pair `k` in state `s`.
    pub fn cap(&self, s: usize, k: usize) -> u32 {
        let l = self.split(s)[k];
        let r_max = phy::max_packets(self.cfg.gains[l.position], true, &self.cfg.phy, X_MAX);
        l.arrivals.min(r_max)
    }

    fn enumerate_actions(&self, s: usize) -> Vec<[Action; NUM_PAIRS]> {
        let mut out = vec![[Action::IDLE; NUM_PAIRS]];
        for k in 0..NUM_PAIRS {
            for r in 0..=self.cap(s, k) {
                let mut joint = [Action::IDLE; NUM_PAIRS];
                joint[k] = Action::send(r);
                out.push(joint);
            }
        }
        out
    }

    pub fn joint_actions(&self, s: usize) -> &[[Action; NUM_PAIRS]] {
        &self.joint_actions[s]
    }

    pub fn joint_action_index(&self, s: usize, joint: &[Action; NUM_PAIRS]) -> Option<usize> {
        self.joint_actions[s].iter().position(|a| a == joint)
    }

    pub fn pair_utility(&self, s: usize, k: usize, action: Action) -> Result<f64> {
        let l = self.split(s)[k];
        let h = self.cfg.gains[l.position];
        let p = phy::tx_power(h, action.band, action.scheduled, &self.cfg.phy)?;
        let drops = phy::packet_drops(l.arrivals, action.band, action.scheduled)?;
        Ok(self.cfg.weights.evaluate(p, drops, l.aoi))
    }

    /// Distribution of one pair's next local state.
    fn local_transitions(&self, l: LocalState, action: Action) -> Vec<(LocalState, f64)> {
        let aoi = phy::advance_aoi(l.aoi, action.band, action.scheduled, self.cfg.a_max);
        let mut out = Vec::new();
        for position in 0..POSITIONS {
            let p_pos = if position == l.position {
                self.cfg.stay_prob
            } else {
                1.0 - self.cfg.stay_prob
            };
            for (x, &p_x) in self.arrival_pmf.iter().enumerate() {
                out.push((
                    LocalState {
                        position,
                        arrivals: x as u32,
                        aoi,
                    },
                    p_pos * p_x,
                ));
            }
        }
        out
    }

    pub fn transitions(&self, s: usize, joint: &[Action; NUM_PAIRS]) -> Vec<(usize, f64)> {
        let locals = self.split(s);
        let t0 = self.local_transitions(locals[0], joint[0]);
        let t1 = self.local_transitions(locals[1], joint[1]);
        let mut out = Vec::with_capacity(t0.len() * t1.len());
        for &(a, pa) in &t0 {
            for &(b, pb) in &t1 {
                out.push((self.join([a, b]), pa * pb));
            }
        }
        out
    }

    /// Samples the next joint state.
    pub fn step<R: Rng + ?Sized>(&self, s: usize, joint: &[Action; NUM_PAIRS], rng: &mut R) -> usize {
        let locals = self.split(s);
        let mut next = locals;
        for k in 0..NUM_PAIRS {
            let l = locals[k];
            let position = if rng.random::<f64>() < self.cfg.stay_prob {
                l.position
            } else {
                1 - l.position
            };
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut arrivals = X_MAX;
            for (x, &p) in self.arrival_pmf.iter().enumerate() {
                acc += p;
                if u < acc {
                    arrivals = x as u32;
                    break;
                }
            }
            next[k] = LocalState {
                position,
                arrivals,
                aoi: phy::advance_aoi(l.aoi, joint[k].band, joint[k].scheduled, self.cfg.a_max),
            };
        }
        self.join(next)
    }

    /// The joint MDP with the summed pair utilities.
    pub fn to_finite_mdp(&self) -> Result<FiniteMdp> {
        let mut actions = Vec::with_capacity(self.num_states());
        for s in 0..self.num_states() {
            let mut acts = Vec::new();
            for joint in self.joint_actions(s) {
                let mut utility = 0.0;
                for (k, &a) in joint.iter().enumerate() {
                    utility += self.pair_utility(s, k, a)?;
                }
                acts.push(MdpAction {
                    utility,
                    transitions: self.transitions(s, joint),
                });
            }
            actions.push(acts);
        }
        FiniteMdp::new(actions, self.cfg.gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_indexing_round_trips() {
        let toy = ToyMdp::new(ToyConfig::default());
        assert_eq!(toy.num_states(), 144);
        for s in 0..toy.num_states() {
            assert_eq!(toy.join(toy.split(s)), s);
        }
    }

    #[test]
    fn send_costs_match_design() {
        let toy = ToyMdp::new(ToyConfig::default());
        let p = &toy.cfg.phy;
        let near = phy::tx_power(toy.cfg.gains[0], true, 1, p).unwrap();
        let far = phy::tx_power(toy.cfg.gains[1], true, 1, p).unwrap();
        assert!((near - 0.01).abs() < 1e-3, "{near}");
        assert!((far - 1.5).abs() < 0.05, "{far}");
        assert_eq!(phy::max_packets(toy.cfg.gains[1], true, p, 1), 1);
    }

    #[test]
    fn kernel_is_stochastic() {
        let toy = ToyMdp::new(ToyConfig::default());
        toy.to_finite_mdp().unwrap();
    }
}
