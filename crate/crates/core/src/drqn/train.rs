//! Centralized offline training of the shared network.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::adam::{AdamConfig, AdamState};
use super::checkpoint::{Checkpoint, RngState};
use super::features::FeatureNorms;
use super::loss::loss_and_grad;
use super::network::{DrqnParams, NetShape};
use super::replay::{Experience, ObservationPool, ReplayMemory};
use crate::error::Result;
use crate::harness::env::{stream_rng, streams};
use crate::harness::episode::encode_all;
use crate::harness::policy::{decide_baseline, decide_proposed, PolicyKind};
use crate::harness::{Environment, ExperimentConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub slots: u64,
    pub shape: NetShape,
    pub norms: FeatureNorms,
    pub r_max: u32,
    pub history_len: usize,
    pub replay_capacity: usize,
    pub minibatch: usize,
    /// Experiences required before the first gradient step.
    pub warmup: usize,
    pub gamma: f64,
    pub adam: AdamConfig,
    pub eps_start: f64,
    pub eps_end: f64,
    pub eps_decay_slots: u64,
    pub target_sync_every: u64,
    pub train_every: u64,
    pub loss_ma_window: usize,
    pub plateau_window: usize,
    pub plateau_rel_tol: f64,
}

impl TrainConfig {
    pub fn from_experiment(cfg: &ExperimentConfig) -> Self {
        Self {
            slots: cfg.train_slots,
            shape: cfg.net_shape(),
            norms: cfg.feature_norms(),
            r_max: cfg.r_max(),
            history_len: cfg.history_len,
            replay_capacity: cfg.replay_capacity,
            minibatch: cfg.minibatch,
            warmup: cfg.minibatch.max(cfg.warmup_min).min(cfg.replay_capacity),
            gamma: cfg.gamma,
            adam: cfg.adam_config(),
            eps_start: cfg.eps_start,
            eps_end: cfg.eps_end,
            eps_decay_slots: (cfg.eps_decay_fraction * cfg.train_slots as f64).round() as u64,
            target_sync_every: cfg.target_sync_every,
            train_every: cfg.train_every,
            loss_ma_window: cfg.loss_ma_window,
            plateau_window: cfg.plateau_window,
            plateau_rel_tol: cfg.plateau_rel_tol,
        }
    }

    /// Linear decay from `eps_start` to `eps_end`, then constant.
    pub fn epsilon(&self, slot: u64) -> f64 {
        if slot >= self.eps_decay_slots {
            return self.eps_end;
        }
        let frac = slot as f64 / self.eps_decay_slots as f64;
        self.eps_start + (self.eps_end - self.eps_start) * frac
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossPoint {
    pub slot: u64,
    pub loss: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub params: DrqnParams,
    /// One entry per gradient step.
    pub loss_trace: Vec<LossPoint>,
    /// Mean utility across pairs, one entry per slot.
    pub utility_trace: Vec<f64>,
    pub slots_run: u64,
    pub stopped_on_plateau: bool,
}

/// Mean loss over gradient steps taken in slots `(slot - window, slot]`.
pub fn loss_moving_average(trace: &[LossPoint], slot: u64, window: u64) -> Option<f64> {
    let lo = slot.saturating_sub(window);
    let xs: Vec<f64> = trace
        .iter()
        .filter(|p| p.slot <= slot && (p.slot > lo || (lo == 0 && p.slot == 0)))
        .map(|p| p.loss)
        .collect();
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// True once the `loss_ma_window` moving average has stayed within a relative
/// band of `plateau_rel_tol` for the last `plateau_window` gradient steps.
fn plateaued(moving_avgs: &[f64], cfg: &TrainConfig) -> bool {
    if moving_avgs.len() <= cfg.plateau_window {
        return false;
    }
    let tail = &moving_avgs[moving_avgs.len() - cfg.plateau_window - 1..];
    let (lo, hi) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &m| (lo.min(m), hi.max(m)));
    lo > 0.0 && (hi - lo) / lo < cfg.plateau_rel_tol
}

struct Pending {
    windows: Vec<f64>,
    actions: Vec<usize>,
    utilities: Vec<f64>,
}

/// Runs the slot loop with epsilon-greedy decisions, storing each transition
/// together with the next slot's actions and taking one minibatch step per
/// `train_every` slots once the memory is warm.
pub fn train_offline(
    env: &mut Environment,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
    mut progress: Option<&mut dyn FnMut(u64, Option<f64>)>,
) -> Result<TrainOutcome> {
    let mut theta = DrqnParams::init(cfg.shape, rng);
    let mut target = theta.clone();
    let mut adam = AdamState::new(&theta, cfg.adam);
    let mut memory = ReplayMemory::new(cfg.replay_capacity);
    let mut pool = ObservationPool::new(&encode_all(env, &cfg.norms, None), cfg.history_len);
    let mut pending: Option<Pending> = None;
    let mut loss_trace = Vec::new();
    let mut moving_avgs = Vec::new();
    let mut window_sum = 0.0;
    let mut utility_trace = Vec::with_capacity(cfg.slots as usize);
    let mut stopped_on_plateau = false;
    let mut slots_run = 0;

    for slot in 0..cfg.slots {
        let caps = env.caps();
        let decision = if rng.random::<f64>() < cfg.epsilon(slot) {
            decide_baseline(PolicyKind::Random, env.states(), &caps, env.grouping(), env.num_bands(), rng)?
        } else {
            decide_proposed(&theta, &pool, &caps, env.grouping(), env.num_bands(), cfg.r_max)?
        };
        let actions: Vec<usize> = decision.actions.iter().map(|a| a.index(cfg.r_max)).collect();
        if let Some(p) = pending.take() {
            memory.push(Experience {
                num_pairs: actions.len(),
                steps: cfg.history_len,
                features: cfg.shape.features,
                windows: p.windows,
                actions: p.actions,
                utilities: p.utilities,
                next_actions: actions.clone(),
            });
        }

        let out = env.step(&decision)?;
        utility_trace.push(out.utilities.iter().sum::<f64>() / out.utilities.len().max(1) as f64);
        let next = encode_all(env, &cfg.norms, Some(&decision));
        let mut windows = Vec::with_capacity(next.len() * (cfg.history_len + 1) * cfg.shape.features);
        for (k, f) in next.into_iter().enumerate() {
            windows.extend(pool.flat_window_with(k, &f));
            pool.push(k, f);
        }
        pending = Some(Pending { windows, actions, utilities: out.utilities });

        let mut loss = None;
        if memory.len() >= cfg.warmup && slot % cfg.train_every == 0 {
            let batch = memory.sample(cfg.minibatch, rng)?;
            let (l, grad) = loss_and_grad(&theta, &target, &batch, cfg.gamma)?;
            adam.step(&mut theta, &grad)?;
            loss_trace.push(LossPoint { slot, loss: l });
            window_sum += l;
            if loss_trace.len() > cfg.loss_ma_window {
                window_sum -= loss_trace[loss_trace.len() - 1 - cfg.loss_ma_window].loss;
            }
            if loss_trace.len() >= cfg.loss_ma_window {
                moving_avgs.push(window_sum / cfg.loss_ma_window as f64);
            }
            loss = Some(l);
        }
        if (slot + 1) % cfg.target_sync_every == 0 {
            target = sync_target(&theta);
        }
        if let Some(cb) = progress.as_deref_mut() {
            cb(slot, loss);
        }
        slots_run = slot + 1;
        if loss.is_some() && plateaued(&moving_avgs, cfg) {
            stopped_on_plateau = true;
            break;
        }
    }
    Ok(TrainOutcome {
        params: theta,
        loss_trace,
        utility_trace,
        slots_run,
        stopped_on_plateau,
    })
}

/// Deep copy used as the frozen target network.
pub fn sync_target(theta: &DrqnParams) -> DrqnParams {
    theta.clone()
}

/// Trains from the configuration's own seed and packages a checkpoint.
pub fn train_from_config(
    cfg: &ExperimentConfig,
    progress: Option<&mut dyn FnMut(u64, Option<f64>)>,
) -> Result<(TrainOutcome, Checkpoint)> {
    let mut env = Environment::new(cfg, cfg.seed)?;
    let mut rng = stream_rng(cfg.seed, streams::TRAINING, 0);
    let outcome = train_offline(&mut env, &TrainConfig::from_experiment(cfg), &mut rng, progress)?;
    let checkpoint = Checkpoint {
        params: outcome.params.clone(),
        config_hash: cfg.hash(),
        rng: RngState::capture(&rng),
    };
    Ok((outcome, checkpoint))
}
