//! Per-slot utility, states, decisions and tabular learning.

pub mod oracle;
pub mod qtable;
pub mod toy;

use serde::{Deserialize, Serialize};

use crate::clustering::GroupAssignment;
use crate::error::{Error, Result};
use crate::mobility::Point;

pub use oracle::{FiniteMdp, MdpAction, OracleFixture, ValueIteration};
pub use qtable::{LearnCfg, QTable};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AoiUnits {
    #[default]
    Slots,
    Seconds,
}

/// Weights of the per-pair utility.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtilityWeights {
    pub vartheta: f64,
    pub xi: f64,
    pub aoi_units: AoiUnits,
    pub slot_s: f64,
}

impl Default for UtilityWeights {
    fn default() -> Self {
        Self {
            vartheta: 2.0,
            xi: 0.9,
            aoi_units: AoiUnits::Slots,
            slot_s: 3e-3,
        }
    }
}

impl UtilityWeights {
    pub fn evaluate(&self, power_w: f64, drops: u32, aoi_slots: u32) -> f64 {
        let aoi = match self.aoi_units {
            AoiUnits::Slots => aoi_slots as f64,
            AoiUnits::Seconds => aoi_slots as f64 * self.slot_s,
        };
        utility(power_w, drops as f64, aoi, self.vartheta, self.xi)
    }

    /// Largest value any reachable input can produce.
    pub fn upper_bound(&self) -> f64 {
        let min_aoi = match self.aoi_units {
            AoiUnits::Slots => 1.0,
            AoiUnits::Seconds => self.slot_s,
        };
        1.0 + self.vartheta + self.xi * (-min_aoi).exp()
    }
}

/// `exp(-p) + vartheta * exp(-l) + xi * exp(-a)`.
pub fn utility(power_w: f64, drops: f64, aoi: f64, vartheta: f64, xi: f64) -> f64 {
    (-power_w).exp() + vartheta * (-drops).exp() + xi * (-aoi).exp()
}

/// `(1 - gamma) * sum_j gamma^j * u_j` over a finite rollout.
pub fn discounted_return(utilities: &[f64], gamma: f64) -> f64 {
    let mut weight = 1.0;
    let mut total = 0.0;
    for &u in utilities {
        total += weight * u;
        weight *= gamma;
    }
    (1.0 - gamma) * total
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VuePairState {
    pub vtx: Point,
    pub vrx: Point,
    pub gain: f64,
    pub arrivals: u32,
    pub aoi_slots: u32,
}

/// What a pair remembers of its own previous decision.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Observation {
    pub prev_band: bool,
    pub prev_scheduled: u32,
}

/// A single pair's choice. `(false, 0)` is the opt-out.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Action {
    pub band: bool,
    pub scheduled: u32,
}

impl Action {
    pub const IDLE: Action = Action {
        band: false,
        scheduled: 0,
    };

    pub fn send(scheduled: u32) -> Self {
        Self {
            band: true,
            scheduled,
        }
    }

    /// Flat index `f * (1 + r_max) + r`.
    pub fn index(self, r_max: u32) -> usize {
        usize::from(self.band) * (r_max as usize + 1) + self.scheduled as usize
    }

    pub fn from_index(index: usize, r_max: u32) -> Self {
        let width = r_max as usize + 1;
        Self {
            band: index >= width,
            scheduled: (index % width) as u32,
        }
    }

    pub fn count(r_max: u32) -> usize {
        2 * (r_max as usize + 1)
    }

    pub fn observation(self) -> Observation {
        Observation {
            prev_band: self.band,
            prev_scheduled: self.scheduled,
        }
    }
}

/// Joint decision for one slot. `band_index[k]` is `Some(b)` exactly when
/// pair `k` holds band `b` of its group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decision {
    pub actions: Vec<Action>,
    pub band_index: Vec<Option<usize>>,
}

impl Decision {
    pub fn idle(num_pairs: usize) -> Self {
        Self {
            actions: vec![Action::IDLE; num_pairs],
            band_index: vec![None; num_pairs],
        }
    }

    /// Checks the binary band flag, one pair per band per group, and
    /// `r <= cap` with `r = 0` for pairs without a band.
    pub fn validate(&self, grouping: &GroupAssignment, num_bands: usize, caps: &[u32]) -> Result<()> {
        let k = self.actions.len();
        if self.band_index.len() != k || grouping.num_pairs() != k || caps.len() != k {
            return Err(Error::Precondition("decision, grouping and caps differ in length".into()));
        }
        for (pair, (a, b)) in self.actions.iter().zip(&self.band_index).enumerate() {
            if a.band != b.is_some() {
                return Err(Error::Precondition(format!("pair {pair}: band flag and band index disagree")));
            }
            if !a.band && a.scheduled > 0 {
                return Err(Error::Precondition(format!("pair {pair}: packets scheduled without a band")));
            }
            if a.scheduled > caps[pair] {
                return Err(Error::Precondition(format!(
                    "pair {pair}: {} packets exceed the cap of {}",
                    a.scheduled, caps[pair]
                )));
            }
        }
        for (g, members) in grouping.groups.iter().enumerate() {
            let mut used = vec![false; num_bands];
            for &pair in members {
                if let Some(b) = self.band_index[pair] {
                    if b >= num_bands {
                        return Err(Error::Precondition(format!("pair {pair}: band {b} out of range")));
                    }
                    if std::mem::replace(&mut used[b], true) {
                        return Err(Error::Precondition(format!("group {g}: band {b} assigned twice")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Per-pair summary fed to the grant step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairChoice {
    /// Value of opting out.
    pub idle_value: f64,
    /// Best packet count with a band and its value; `None` when nothing can be sent.
    pub best_send: Option<(u32, f64)>,
}

impl PairChoice {
    pub fn gain(&self) -> Option<f64> {
        self.best_send.map(|(_, v)| v - self.idle_value)
    }
}

/// Picks the best `r` in `1..=cap` from `value(r)`; ties go to the larger `r`.
pub fn best_send(cap: u32, mut value: impl FnMut(u32) -> f64) -> Option<(u32, f64)> {
    let mut best: Option<(u32, f64)> = None;
    for r in 1..=cap {
        let v = value(r);
        if best.is_none_or(|(_, bv)| v >= bv) {
            best = Some((r, v));
        }
    }
    best
}

/// Pairs of one group that win a band: the top `num_bands` by priority,
/// ties to the lower index, pairs with `None` priority never granted.
/// Returned in ascending pair index.
pub fn grant_in_group(members: &[usize], priority: impl Fn(usize) -> Option<f64>, num_bands: usize) -> Vec<usize> {
    let mut ranked: Vec<(usize, f64)> = members
        .iter()
        .filter_map(|&k| priority(k).map(|p| (k, p)))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut winners: Vec<usize> = ranked.into_iter().take(num_bands).map(|(k, _)| k).collect();
    winners.sort_unstable();
    winners
}

/// Assembles a decision from per-group winners. Bands go out in ascending
/// order of pair index; `scheduled(k)` gives each winner's packet count.
pub fn assemble_decision(
    grouping: &GroupAssignment,
    winners_per_group: &[Vec<usize>],
    mut scheduled: impl FnMut(usize) -> u32,
) -> Decision {
    let mut decision = Decision::idle(grouping.num_pairs());
    for winners in winners_per_group {
        for (band, &k) in winners.iter().enumerate() {
            decision.actions[k] = Action::send(scheduled(k));
            decision.band_index[k] = Some(band);
        }
    }
    decision
}

/// Grants bands to the pairs whose best send strictly beats opting out.
pub fn grant_by_gain(choices: &[PairChoice], grouping: &GroupAssignment, num_bands: usize) -> Decision {
    let winners: Vec<Vec<usize>> = grouping
        .groups
        .iter()
        .map(|members| {
            grant_in_group(
                members,
                |k| choices[k].gain().filter(|&g| g > 0.0),
                num_bands,
            )
        })
        .collect();
    assemble_decision(grouping, &winners, |k| {
        choices[k].best_send.expect("winners can send").0
    })
}

/// Maximizes the sum of per-pair table values under the band constraints.
/// `caps[k]` is `min(X_k, R_max_k)`. Missing entries read as zero.
pub fn greedy_joint_decision<S: std::hash::Hash + Eq + Clone>(
    tables: &[QTable<S, Action>],
    keys: &[S],
    grouping: &GroupAssignment,
    num_bands: usize,
    caps: &[u32],
) -> Decision {
    let choices: Vec<PairChoice> = tables
        .iter()
        .zip(keys)
        .zip(caps)
        .map(|((q, key), &cap)| PairChoice {
            idle_value: q.value(key, &Action::IDLE),
            best_send: best_send(cap, |r| q.value(key, &Action::send(r))),
        })
        .collect();
    grant_by_gain(&choices, grouping, num_bands)
}

/// Tabular key for a pair: positions binned on a square grid plus the
/// discrete state and the previous decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocalKey {
    pub vtx_bin: (i32, i32),
    pub vrx_bin: (i32, i32),
    pub arrivals: u32,
    pub aoi_slots: u32,
    pub observation: Observation,
}

impl LocalKey {
    pub const DEFAULT_BIN_M: f64 = 5.0;

    pub fn quantize(state: &VuePairState, observation: Observation, bin_m: f64) -> Self {
        let bin = |p: Point| ((p.x / bin_m).floor() as i32, (p.y / bin_m).floor() as i32);
        Self {
            vtx_bin: bin(state.vtx),
            vrx_bin: bin(state.vrx),
            arrivals: state.arrivals,
            aoi_slots: state.aoi_slots,
            observation,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn utility_examples() {
        let w = UtilityWeights::default();
        assert!((w.evaluate(0.0, 0, 1) - 3.331_091_9).abs() < 1e-6);
        assert!((w.evaluate(4.2e-4, 0, 1) - 3.330_672).abs() < 1e-6);
        assert!((utility(0.0, 1e3, 1e3, 2.0, 0.9) - 1.0).abs() < 1e-12);
        assert_eq!(w.evaluate(0.0, 0, 1), w.upper_bound());
        let secs = UtilityWeights { aoi_units: AoiUnits::Seconds, ..w };
        assert!((secs.evaluate(0.0, 0, 1) - (3.0 + 0.9 * (-0.003f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn discounted_return_examples() {
        assert!((discounted_return(&[10.0], 0.9) - 1.0).abs() < 1e-12);
        assert_eq!(discounted_return(&[4.0, 7.0], 0.0), 4.0);
        let long = vec![2.5; 400];
        assert!((discounted_return(&long, 0.9) - 2.5).abs() < 2.5 * 0.9f64.powi(400) + 1e-12);
    }

    #[test]
    fn action_index_round_trip() {
        for i in 0..Action::count(15) {
            assert_eq!(Action::from_index(i, 15).index(15), i);
        }
        assert_eq!(Action::send(3).index(15), 19);
    }

    #[test]
    fn two_pairs_one_band_brute_force() {
        let choices = [
            PairChoice { idle_value: 1.0, best_send: Some((2, 2.0)) },
            PairChoice { idle_value: 1.2, best_send: Some((1, 1.5)) },
        ];
        let grouping = GroupAssignment::single(2);
        let d = grant_by_gain(&choices, &grouping, 1);
        assert_eq!(d.actions, vec![Action::send(2), Action::IDLE]);
        // Brute force: idle/idle 2.2, first 3.2, second 2.5.
        let total: f64 = d
            .actions
            .iter()
            .zip(&choices)
            .map(|(a, c)| if a.band { c.best_send.unwrap().1 } else { c.idle_value })
            .sum();
        assert!((total - 3.2).abs() < 1e-12);
        d.validate(&grouping, 1, &[2, 1]).unwrap();
    }

    #[test]
    fn negative_gains_and_no_contention() {
        let grouping = GroupAssignment::single(3);
        let losing = [PairChoice { idle_value: 1.0, best_send: Some((1, 0.5)) }; 3];
        assert_eq!(grant_by_gain(&losing, &grouping, 2), Decision::idle(3));
        let winning = [PairChoice { idle_value: 0.0, best_send: Some((1, 0.5)) }; 3];
        let d = grant_by_gain(&winning, &grouping, 3);
        assert_eq!(d.band_index, vec![Some(0), Some(1), Some(2)]);
        let nothing = [PairChoice { idle_value: 0.0, best_send: None }; 3];
        assert_eq!(grant_by_gain(&nothing, &grouping, 3), Decision::idle(3));
    }

    #[test]
    fn validation_catches_violations() {
        let grouping = GroupAssignment::single(2);
        let mut d = Decision::idle(2);
        d.actions = vec![Action::send(1), Action::send(1)];
        d.band_index = vec![Some(0), Some(0)];
        assert!(d.validate(&grouping, 2, &[1, 1]).is_err());
        d.band_index = vec![Some(0), Some(1)];
        d.validate(&grouping, 2, &[1, 1]).unwrap();
        assert!(d.validate(&grouping, 2, &[0, 1]).is_err());
    }

    #[test]
    fn local_key_bins() {
        let s = VuePairState {
            vtx: Point::new(12.0, 3.9),
            vrx: Point::new(42.0, 3.9),
            gain: 1e-10,
            arrivals: 2,
            aoi_slots: 4,
        };
        let key = LocalKey::quantize(&s, Observation::default(), 5.0);
        assert_eq!(key.vtx_bin, (2, 0));
        assert_eq!(key.vrx_bin, (8, 0));
    }
}
