use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SweepParam};
use super::env::{stream_rng, streams, Environment, SlotOutcome};
use super::policy::{decide_baseline, decide_proposed, PolicyKind};
use super::report::{summarize, MetricsRow, SummaryRow};
use crate::drqn::{DrqnParams, FeatureNorms, ObservationPool};
use crate::error::{Error, Result};
use crate::mdp::{discounted_return, Decision, Observation};

/// Per-slot means across pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotMetrics {
    pub slot: u64,
    pub avg_power_w: f64,
    pub avg_drops: f64,
    pub avg_aoi_slots: f64,
    pub avg_aoi_s: f64,
    pub avg_utility: f64,
}

impl SlotMetrics {
    pub fn from_outcome(slot: u64, out: &SlotOutcome, slot_s: f64) -> Self {
        let n = out.utilities.len().max(1) as f64;
        let avg_aoi_slots = out.aoi_slots.iter().map(|&a| a as f64).sum::<f64>() / n;
        Self {
            slot,
            avg_power_w: out.power_w.iter().sum::<f64>() / n,
            avg_drops: out.drops.iter().map(|&l| l as f64).sum::<f64>() / n,
            avg_aoi_slots,
            avg_aoi_s: avg_aoi_slots * slot_s,
            avg_utility: out.utilities.iter().sum::<f64>() / n,
        }
    }
}

/// Means over the horizon of the per-slot values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpisodeSummary {
    pub slots: u64,
    pub avg_power_w: f64,
    pub avg_drops: f64,
    pub avg_aoi_slots: f64,
    pub avg_aoi_s: f64,
    pub avg_utility: f64,
    pub discounted_return: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub slots: Vec<SlotMetrics>,
    pub summary: EpisodeSummary,
}

fn summarize_slots(slots: &[SlotMetrics], gamma: f64) -> EpisodeSummary {
    let n = slots.len().max(1) as f64;
    let mean = |f: fn(&SlotMetrics) -> f64| slots.iter().map(f).sum::<f64>() / n;
    let utilities: Vec<f64> = slots.iter().map(|s| s.avg_utility).collect();
    EpisodeSummary {
        slots: slots.len() as u64,
        avg_power_w: mean(|s| s.avg_power_w),
        avg_drops: mean(|s| s.avg_drops),
        avg_aoi_slots: mean(|s| s.avg_aoi_slots),
        avg_aoi_s: mean(|s| s.avg_aoi_s),
        avg_utility: mean(|s| s.avg_utility),
        discounted_return: discounted_return(&utilities, gamma),
    }
}

/// Current feature vector of every pair given the previous slot's decision.
pub(crate) fn encode_all(env: &Environment, norms: &FeatureNorms, decision: Option<&Decision>) -> Vec<Vec<f64>> {
    env.states()
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let o = decision.map_or(Observation::default(), |d| d.actions[k].observation());
            norms.encode(s, o).to_vec()
        })
        .collect()
}

/// Runs one policy for `slots` slots from `seed`. The proposed policy needs
/// trained parameters.
pub fn run_episode(
    cfg: &ExperimentConfig,
    kind: PolicyKind,
    params: Option<&DrqnParams>,
    slots: u64,
    seed: u64,
) -> Result<Episode> {
    let mut env = Environment::new(cfg, seed)?;
    let mut policy_rng = stream_rng(seed, streams::POLICY, 0);
    let norms = cfg.feature_norms();
    let r_max = cfg.r_max();
    let mut pool = match kind {
        PolicyKind::Proposed => {
            let theta = params.ok_or(Error::MissingCheckpoint)?;
            if theta.shape() != cfg.net_shape() {
                return Err(Error::ShapeMismatch(format!(
                    "checkpoint network {:?} does not fit this configuration {:?}",
                    theta.shape(),
                    cfg.net_shape()
                )));
            }
            Some(ObservationPool::new(&encode_all(&env, &norms, None), cfg.history_len))
        }
        _ => None,
    };
    let mut metrics = Vec::with_capacity(slots as usize);
    for j in 0..slots {
        let caps = env.caps();
        let decision = match (&pool, params) {
            (Some(pool), Some(theta)) => {
                decide_proposed(theta, pool, &caps, env.grouping(), env.num_bands(), r_max)?
            }
            _ => decide_baseline(kind, env.states(), &caps, env.grouping(), env.num_bands(), &mut policy_rng)?,
        };
        let out = env.step(&decision)?;
        metrics.push(SlotMetrics::from_outcome(j, &out, env.slot_s()));
        if let Some(pool) = pool.as_mut() {
            for (k, f) in encode_all(&env, &norms, Some(&decision)).into_iter().enumerate() {
                pool.push(k, f);
            }
        }
    }
    let summary = summarize_slots(&metrics, cfg.gamma);
    Ok(Episode { slots: metrics, summary })
}

/// Long-format rows plus per-(value, policy) statistics across seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<MetricsRow>,
    pub summary: Vec<SummaryRow>,
}

/// Runs every `(value, policy, seed)` cell of a sweep, in that nesting order.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    param: SweepParam,
    values: &[f64],
    policies: &[PolicyKind],
    seeds: &[u64],
    params: Option<&DrqnParams>,
    slots: u64,
) -> Result<ExperimentReport> {
    let mut rows = Vec::new();
    let mut episodes = Vec::new();
    for &value in values {
        let cell_cfg = cfg.with_sweep(param, value)?;
        for &kind in policies {
            for &seed in seeds {
                let ep = run_episode(&cell_cfg, kind, params, slots, seed)?;
                rows.extend(ep.slots.iter().map(|m| MetricsRow::new(param.name(), value, kind, seed, m)));
                episodes.push((value, kind, ep.summary));
            }
        }
    }
    let summary = summarize(param.name(), &episodes);
    Ok(ExperimentReport { rows, summary })
}
