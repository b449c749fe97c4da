use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use rand::Rng;

use crate::clustering::GroupAssignment;
use crate::drqn::{DrqnParams, ObservationPool};
use crate::error::{Error, Result};
use crate::mdp::{assemble_decision, best_send, grant_by_gain, grant_in_group, Action, Decision, PairChoice, VuePairState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    Proposed,
    ChannelAware,
    PacketAware,
    AoiAware,
    Random,
}

impl PolicyKind {
    pub const BASELINES: [PolicyKind; 4] = [
        PolicyKind::ChannelAware,
        PolicyKind::PacketAware,
        PolicyKind::AoiAware,
        PolicyKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Proposed => "proposed",
            PolicyKind::ChannelAware => "channel-aware",
            PolicyKind::PacketAware => "packet-aware",
            PolicyKind::AoiAware => "aoi-aware",
            PolicyKind::Random => "random",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "proposed" | "drqn" => Ok(PolicyKind::Proposed),
            "channel-aware" | "channel" => Ok(PolicyKind::ChannelAware),
            // Queue-aware is the same packet-ranked rule under another name.
            "packet-aware" | "packet" | "queue-aware" => Ok(PolicyKind::PacketAware),
            "aoi-aware" | "aoi" => Ok(PolicyKind::AoiAware),
            "random" => Ok(PolicyKind::Random),
            other => Err(Error::Config(format!("unknown policy `{other}`"))),
        }
    }
}

/// Rule-based allocation. Per group the top `num_bands` pairs by the
/// policy's score get a band; ties go to the lower index.
///
/// The ranked rules send `min(X, R_max)`. The random rule ranks by a uniform
/// key and sends a uniform count in `0..=min(X, R_max)`, drawing exactly two
/// uniforms per pair whatever the outcome.
pub fn decide_baseline<R: Rng + ?Sized>(
    kind: PolicyKind,
    states: &[VuePairState],
    caps: &[u32],
    grouping: &GroupAssignment,
    num_bands: usize,
    rng: &mut R,
) -> Result<Decision> {
    let k = states.len();
    let (scores, scheduled): (Vec<f64>, Vec<u32>) = match kind {
        PolicyKind::Proposed => return Err(Error::MissingCheckpoint),
        PolicyKind::ChannelAware => (states.iter().map(|s| s.gain).collect(), caps.to_vec()),
        PolicyKind::PacketAware => (states.iter().map(|s| s.arrivals as f64).collect(), caps.to_vec()),
        PolicyKind::AoiAware => (states.iter().map(|s| s.aoi_slots as f64).collect(), caps.to_vec()),
        PolicyKind::Random => (0..k)
            .map(|i| {
                let key: f64 = rng.random();
                let u: f64 = rng.random();
                let r = ((u * (caps[i] as f64 + 1.0)) as u32).min(caps[i]);
                (key, r)
            })
            .unzip(),
    };
    let winners: Vec<Vec<usize>> = grouping
        .groups
        .iter()
        .map(|members| grant_in_group(members, |i| Some(scores[i]), num_bands))
        .collect();
    Ok(assemble_decision(grouping, &winners, |i| scheduled[i]))
}

/// Reduces per-pair Q-value rows to a decision: infeasible counts are masked,
/// bands go to the largest strictly positive gains over opting out.
pub fn decide_from_q(
    q: ArrayView2<f64>,
    caps: &[u32],
    grouping: &GroupAssignment,
    num_bands: usize,
    r_max: u32,
) -> Decision {
    let choices: Vec<PairChoice> = caps
        .iter()
        .enumerate()
        .map(|(k, &cap)| PairChoice {
            idle_value: q[[k, Action::IDLE.index(r_max)]],
            best_send: best_send(cap.min(r_max), |r| q[[k, Action::send(r).index(r_max)]]),
        })
        .collect();
    grant_by_gain(&choices, grouping, num_bands)
}

/// Shared-network decision: every pair scores its own observation window.
pub fn decide_proposed(
    theta: &DrqnParams,
    pool: &ObservationPool,
    caps: &[u32],
    grouping: &GroupAssignment,
    num_bands: usize,
    r_max: u32,
) -> Result<Decision> {
    let q = theta.forward(&pool.batch())?;
    if q.ncols() != Action::count(r_max) {
        return Err(Error::ShapeMismatch(format!(
            "network has {} outputs, the action space needs {}",
            q.ncols(),
            Action::count(r_max)
        )));
    }
    Ok(decide_from_q(q.view(), caps, grouping, num_bands, r_max))
}
