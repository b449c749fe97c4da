//! The slot-level simulator: mobility, channels, arrivals, AoI and grouping.
//!
//! Randomness is split into independent streams (per-pair mobility, per-pair
//! arrivals, clustering) so that two policies run from the same seed see the
//! same vehicle motion and the same arrivals.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use crate::clustering::{cluster_groups, ClusterConfig, GroupAssignment};
use crate::error::Result;
use crate::mdp::{Decision, UtilityWeights, VuePairState};
use crate::mobility::{build_map, classify_link, RoadMap, VehicleTrace, VuePairGeometry};
use crate::phy::{self, PhyParams, TrafficParams};

/// Stream tags for [`stream_rng`].
pub mod streams {
    pub const MOBILITY: u64 = 1;
    pub const ARRIVALS: u64 = 2;
    pub const CLUSTERING: u64 = 3;
    pub const POLICY: u64 = 4;
    pub const TRAINING: u64 = 5;
}

/// An independent generator for `(domain, index)` under `seed`.
pub fn stream_rng(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((domain << 32) | index);
    rng
}

/// What one slot produced for each pair.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotOutcome {
    pub power_w: Vec<f64>,
    pub drops: Vec<u32>,
    /// AoI during the slot, before the update.
    pub aoi_slots: Vec<u32>,
    pub utilities: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Environment {
    map: RoadMap,
    phy: PhyParams,
    traffic: TrafficParams,
    weights: UtilityWeights,
    cluster: ClusterConfig,
    num_bands: usize,
    num_groups: usize,
    pair_distance_m: f64,
    speed_mps: f64,
    min_link_m: f64,
    recluster_every: u64,
    vehicles: Vec<VehicleTrace>,
    states: Vec<VuePairState>,
    grouping: GroupAssignment,
    slot: u64,
    mobility_rngs: Vec<ChaCha8Rng>,
    arrival_rngs: Vec<ChaCha8Rng>,
    cluster_rng: ChaCha8Rng,
}

impl Environment {
    pub fn new(cfg: &ExperimentConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let map = build_map(&cfg.map_config())?;
        let k = cfg.num_pairs;
        let mut mobility_rngs: Vec<ChaCha8Rng> =
            (0..k).map(|i| stream_rng(seed, streams::MOBILITY, i as u64)).collect();
        let arrival_rngs = (0..k).map(|i| stream_rng(seed, streams::ARRIVALS, i as u64)).collect();
        let vehicles = mobility_rngs
            .iter_mut()
            .map(|rng| VehicleTrace::random_spawn(&map, cfg.pair_distance_m, rng))
            .collect::<Result<Vec<_>>>()?;
        let mut env = Self {
            map,
            phy: cfg.phy_params(),
            traffic: cfg.traffic_params(),
            weights: cfg.utility_weights(),
            cluster: cfg.cluster_config(),
            num_bands: cfg.num_bands,
            num_groups: cfg.num_groups,
            pair_distance_m: cfg.pair_distance_m,
            speed_mps: cfg.speed_mps(),
            min_link_m: cfg.min_link_distance_m,
            recluster_every: cfg.recluster_every,
            vehicles,
            states: Vec::with_capacity(k),
            grouping: GroupAssignment::single(k),
            slot: 0,
            mobility_rngs,
            arrival_rngs,
            cluster_rng: stream_rng(seed, streams::CLUSTERING, 0),
        };
        for i in 0..k {
            let arrivals = phy::sample_arrivals(&env.traffic, &mut env.arrival_rngs[i]);
            let (vtx, vrx, gain) = env.link(i)?;
            env.states.push(VuePairState { vtx, vrx, gain, arrivals, aoi_slots: 1 });
        }
        env.regroup()?;
        Ok(env)
    }

    fn link(&self, i: usize) -> Result<(crate::mobility::Point, crate::mobility::Point, f64)> {
        let geo = VuePairGeometry::from_trace(&self.vehicles[i], self.pair_distance_m)?;
        let class = classify_link(&self.map, geo.vtx_position, geo.vrx_position, self.phy.ell0_m)?;
        let gain = phy::channel_gain_floored(class, geo.vtx_position, geo.vrx_position, &self.phy, self.min_link_m);
        Ok((geo.vtx_position, geo.vrx_position, gain))
    }

    fn regroup(&mut self) -> Result<()> {
        let midpoints: Vec<_> = self.states.iter().map(|s| s.vtx.midpoint(s.vrx)).collect();
        self.grouping = cluster_groups(&midpoints, self.num_groups, &self.cluster, &mut self.cluster_rng)?;
        Ok(())
    }

    pub fn map(&self) -> &RoadMap {
        &self.map
    }

    pub fn phy(&self) -> &PhyParams {
        &self.phy
    }

    pub fn weights(&self) -> &UtilityWeights {
        &self.weights
    }

    pub fn num_pairs(&self) -> usize {
        self.states.len()
    }

    pub fn num_bands(&self) -> usize {
        self.num_bands
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn slot_s(&self) -> f64 {
        self.phy.slot_s
    }

    pub fn states(&self) -> &[VuePairState] {
        &self.states
    }

    pub fn grouping(&self) -> &GroupAssignment {
        &self.grouping
    }

    /// Per-pair departure cap with a band, `R_max` after the global clamp.
    pub fn r_max(&self, k: usize) -> u32 {
        phy::max_packets(self.states[k].gain, true, &self.phy, self.traffic.r_max_global)
    }

    /// Largest schedulable count per pair, `min(X, R_max)`.
    pub fn caps(&self) -> Vec<u32> {
        (0..self.num_pairs())
            .map(|k| self.states[k].arrivals.min(self.r_max(k)))
            .collect()
    }

    /// Applies a decision, then moves the network on to the next slot.
    pub fn step(&mut self, decision: &Decision) -> Result<SlotOutcome> {
        decision.validate(&self.grouping, self.num_bands, &self.caps())?;
        let k = self.num_pairs();
        let mut out = SlotOutcome {
            power_w: Vec::with_capacity(k),
            drops: Vec::with_capacity(k),
            aoi_slots: Vec::with_capacity(k),
            utilities: Vec::with_capacity(k),
        };
        for (s, a) in self.states.iter().zip(&decision.actions) {
            let p = phy::tx_power(s.gain, a.band, a.scheduled, &self.phy)?;
            let l = phy::packet_drops(s.arrivals, a.band, a.scheduled)?;
            out.utilities.push(self.weights.evaluate(p, l, s.aoi_slots));
            out.power_w.push(p);
            out.drops.push(l);
            out.aoi_slots.push(s.aoi_slots);
        }
        let step_m = self.speed_mps * self.phy.slot_s;
        for i in 0..k {
            let a = decision.actions[i];
            self.vehicles[i].advance(&self.map, step_m, &mut self.mobility_rngs[i], None);
            let (vtx, vrx, gain) = self.link(i)?;
            let s = &mut self.states[i];
            s.aoi_slots = phy::advance_aoi(s.aoi_slots, a.band, a.scheduled, self.traffic.a_max_slots);
            s.arrivals = phy::sample_arrivals(&self.traffic, &mut self.arrival_rngs[i]);
            s.vtx = vtx;
            s.vrx = vrx;
            s.gain = gain;
        }
        self.slot += 1;
        if self.slot.is_multiple_of(self.recluster_every) {
            self.regroup()?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::Decision;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            num_pairs: 6,
            num_groups: 2,
            num_bands: 2,
            arrival_rate: 2.0,
            pair_distance_m: 30.0,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn idle_slots_drop_everything_and_age() {
        let mut env = Environment::new(&small(), 3).unwrap();
        for j in 0..5 {
            let arrivals: Vec<u32> = env.states().iter().map(|s| s.arrivals).collect();
            let out = env.step(&Decision::idle(6)).unwrap();
            assert!(out.power_w.iter().all(|&p| p == 0.0));
            assert_eq!(out.drops, arrivals);
            assert!(out.aoi_slots.iter().all(|&a| a == j + 1));
        }
    }

    #[test]
    fn grouping_is_a_partition() {
        let env = Environment::new(&small(), 9).unwrap();
        let g = env.grouping();
        assert_eq!(g.num_groups(), 2);
        let mut all: Vec<usize> = g.groups.iter().flatten().copied().collect();
        all.sort();
        assert_eq!(all, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn seeded_runs_agree() {
        let mut a = Environment::new(&small(), 4).unwrap();
        let mut b = Environment::new(&small(), 4).unwrap();
        for _ in 0..50 {
            a.step(&Decision::idle(6)).unwrap();
            b.step(&Decision::idle(6)).unwrap();
        }
        assert_eq!(a.states(), b.states());
    }
}
