use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clustering::ClusterConfig;
use crate::drqn::{AdamConfig, FeatureNorms, NetShape, FEATURE_DIM};
use crate::error::{Error, Result};
use crate::mdp::{Action, AoiUnits, UtilityWeights};
use crate::mobility::MapConfig;
use crate::phy::{db_to_linear, dbm_to_watts, PhyParams, TrafficParams};

/// Every tunable of a run. Field names double as config-file keys; missing
/// keys take the defaults below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub num_pairs: usize,
    pub num_bands: usize,
    pub num_groups: usize,
    pub pair_distance_m: f64,
    /// Mean packets per slot.
    pub arrival_rate: f64,
    pub speed_kmh: f64,

    pub side_length_m: f64,
    pub intersections_per_axis: usize,
    pub lane_width_m: f64,

    pub phi_db: f64,
    pub rho_db: f64,
    pub eta: f64,
    pub ell0_m: f64,
    pub psi: f64,
    pub bandwidth_hz: f64,
    pub noise_psd_dbm_per_hz: f64,
    /// Constant inter-group interference; defaults to the in-band noise power.
    pub interference_w: Option<f64>,
    pub slot_s: f64,
    pub packet_bits: f64,
    pub p_max_w: f64,
    pub min_link_distance_m: f64,

    pub x_max: u32,
    /// Defaults to `x_max`.
    pub r_max_global: Option<u32>,
    pub a_max_slots: u32,

    pub zeta_m: f64,
    pub varrho_m: f64,
    pub recluster_every: u64,

    pub vartheta: f64,
    pub xi: f64,
    pub gamma: f64,
    pub aoi_utility_units: AoiUnits,

    pub history_len: usize,
    pub replay_capacity: usize,
    pub minibatch: usize,
    pub hidden: usize,
    pub dense: usize,
    pub adam_lr: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Share of the training budget over which exploration decays.
    pub eps_decay_fraction: f64,
    pub target_sync_every: u64,
    pub warmup_min: usize,
    pub train_slots: u64,
    pub train_every: u64,
    pub loss_ma_window: usize,
    pub plateau_window: usize,
    pub plateau_rel_tol: f64,

    pub seed: u64,
    pub eval_slots: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            num_pairs: 56,
            num_bands: 5,
            num_groups: 10,
            pair_distance_m: 50.0,
            arrival_rate: 5.0,
            speed_kmh: 60.0,
            side_length_m: 250.0,
            intersections_per_axis: 3,
            lane_width_m: 4.0,
            phi_db: -68.5,
            rho_db: -54.5,
            eta: 1.61,
            ell0_m: 15.0,
            psi: 1.0,
            bandwidth_hz: 800e3,
            noise_psd_dbm_per_hz: -174.0,
            interference_w: None,
            slot_s: 3e-3,
            packet_bits: 2000.0,
            p_max_w: 2.0,
            min_link_distance_m: 1.0,
            x_max: 15,
            r_max_global: None,
            a_max_slots: 100,
            zeta_m: 150.0,
            varrho_m: 30.0,
            recluster_every: 1,
            vartheta: 2.0,
            xi: 0.9,
            gamma: 0.9,
            aoi_utility_units: AoiUnits::Slots,
            history_len: 10,
            replay_capacity: 5000,
            minibatch: 200,
            hidden: 32,
            dense: 32,
            adam_lr: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            eps_start: 1.0,
            eps_end: 0.05,
            eps_decay_fraction: 0.6,
            target_sync_every: 100,
            warmup_min: 500,
            train_slots: 20_000,
            train_every: 1,
            loss_ma_window: 500,
            plateau_window: 2000,
            plateau_rel_tol: 1e-3,
            seed: 1,
            eval_slots: 5000,
        }
    }
}

/// Parameters a sweep may vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Bands,
    PairDistance,
    Pairs,
    ArrivalRate,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Bands => "B",
            SweepParam::PairDistance => "ell",
            SweepParam::Pairs => "K",
            SweepParam::ArrivalRate => "lambda",
        }
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "B" => Ok(SweepParam::Bands),
            "ell" => Ok(SweepParam::PairDistance),
            "K" => Ok(SweepParam::Pairs),
            "lambda" => Ok(SweepParam::ArrivalRate),
            other => Err(Error::Config(format!("unknown sweep parameter `{other}` (expected B, ell, K or lambda)"))),
        }
    }
}

fn whole(value: f64, what: &str) -> Result<usize> {
    if value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
        Ok(value as usize)
    } else {
        Err(Error::Config(format!("{what} must be a non-negative integer, got {value}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First eight bytes of the SHA-256 of the canonical serialization.
    pub fn hash(&self) -> u64 {
        let digest = Sha256::digest(self.to_toml_string().as_bytes());
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&digest[..8]);
        u64::from_le_bytes(bytes)
    }

    pub fn r_max(&self) -> u32 {
        self.r_max_global.unwrap_or(self.x_max)
    }

    pub fn speed_mps(&self) -> f64 {
        self.speed_kmh / 3.6
    }

    pub fn phy_params(&self) -> PhyParams {
        let noise_psd_w_per_hz = dbm_to_watts(self.noise_psd_dbm_per_hz);
        PhyParams {
            phi: db_to_linear(self.phi_db),
            rho: db_to_linear(self.rho_db),
            eta: self.eta,
            ell0_m: self.ell0_m,
            psi: self.psi,
            bandwidth_hz: self.bandwidth_hz,
            noise_psd_w_per_hz,
            slot_s: self.slot_s,
            packet_bits: self.packet_bits,
            p_max_w: self.p_max_w,
            interference_w: self
                .interference_w
                .unwrap_or(self.bandwidth_hz * noise_psd_w_per_hz),
        }
    }

    pub fn traffic_params(&self) -> TrafficParams {
        TrafficParams {
            lambda_pkts_per_slot: self.arrival_rate,
            x_max: self.x_max,
            r_max_global: self.r_max(),
            a_max_slots: self.a_max_slots,
        }
    }

    pub fn map_config(&self) -> MapConfig {
        MapConfig {
            side_length_m: self.side_length_m,
            intersections_per_axis: self.intersections_per_axis,
            lane_width_m: self.lane_width_m,
        }
    }

    pub fn cluster_config(&self) -> ClusterConfig {
        ClusterConfig {
            zeta_m: self.zeta_m,
            varrho_m: self.varrho_m,
        }
    }

    pub fn utility_weights(&self) -> UtilityWeights {
        UtilityWeights {
            vartheta: self.vartheta,
            xi: self.xi,
            aoi_units: self.aoi_utility_units,
            slot_s: self.slot_s,
        }
    }

    pub fn net_shape(&self) -> NetShape {
        NetShape {
            features: FEATURE_DIM,
            hidden: self.hidden,
            dense: self.dense,
            actions: Action::count(self.r_max()),
        }
    }

    pub fn adam_config(&self) -> AdamConfig {
        AdamConfig {
            lr: self.adam_lr,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }

    pub fn feature_norms(&self) -> FeatureNorms {
        FeatureNorms::new(
            &self.phy_params(),
            self.side_length_m,
            self.min_link_distance_m,
            self.x_max,
            self.a_max_slots,
            self.r_max(),
        )
    }

    /// Copy with one sweep parameter replaced, validated.
    pub fn with_sweep(&self, param: SweepParam, value: f64) -> Result<Self> {
        let mut cfg = self.clone();
        match param {
            SweepParam::Bands => cfg.num_bands = whole(value, "B")?,
            SweepParam::Pairs => cfg.num_pairs = whole(value, "K")?,
            SweepParam::PairDistance => cfg.pair_distance_m = value,
            SweepParam::ArrivalRate => cfg.arrival_rate = value,
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reports the first violated constraint.
    pub fn validate(&self) -> Result<()> {
        self.phy_params().validate()?;
        self.traffic_params().validate()?;
        let fail = |msg: String| Err(Error::Config(msg));
        if self.num_groups < 2 {
            return fail(format!("num_groups must be at least 2, got {}", self.num_groups));
        }
        if self.num_pairs < self.num_groups {
            return fail(format!(
                "num_pairs ({}) must be at least num_groups ({})",
                self.num_pairs, self.num_groups
            ));
        }
        let positive = [
            ("pair_distance_m", self.pair_distance_m),
            ("side_length_m", self.side_length_m),
            ("lane_width_m", self.lane_width_m),
            ("zeta_m", self.zeta_m),
            ("varrho_m", self.varrho_m),
            ("min_link_distance_m", self.min_link_distance_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.speed_kmh.is_finite() && self.speed_kmh >= 0.0) {
            return fail(format!("speed_kmh must be non-negative, got {}", self.speed_kmh));
        }
        let span = self.side_length_m * (self.intersections_per_axis.max(1) - 1) as f64
            / self.intersections_per_axis.max(1) as f64;
        if self.pair_distance_m >= span {
            return fail(format!(
                "pair_distance_m ({}) must be below the road span ({span} m)",
                self.pair_distance_m
            ));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return fail(format!("gamma must lie in [0, 1), got {}", self.gamma));
        }
        if self.vartheta < 0.0 || self.xi < 0.0 {
            return fail("utility weights must be non-negative".into());
        }
        if self.recluster_every == 0 || self.target_sync_every == 0 || self.train_every == 0 {
            return fail("recluster_every, target_sync_every and train_every must be positive".into());
        }
        if self.history_len == 0 || self.hidden == 0 || self.dense == 0 {
            return fail("history_len, hidden and dense must be positive".into());
        }
        if self.minibatch == 0 || self.minibatch > self.replay_capacity {
            return fail(format!(
                "minibatch ({}) must be in 1..=replay_capacity ({})",
                self.minibatch, self.replay_capacity
            ));
        }
        if !(0.0..=1.0).contains(&self.eps_start)
            || !(0.0..=1.0).contains(&self.eps_end)
            || !(0.0..=1.0).contains(&self.eps_decay_fraction)
        {
            return fail("exploration settings must lie in [0, 1]".into());
        }
        if !(self.adam_lr > 0.0 && (0.0..1.0).contains(&self.adam_beta1) && (0.0..1.0).contains(&self.adam_beta2)) {
            return fail("Adam needs lr > 0 and betas in [0, 1)".into());
        }
        if self.loss_ma_window == 0 || self.plateau_window == 0 {
            return fail("loss_ma_window and plateau_window must be positive".into());
        }
        Ok(())
    }
}
