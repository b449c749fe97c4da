//! Configuration, the slot loop, baselines, sweeps and CSV reports.

pub mod config;
pub mod env;
pub mod episode;
pub mod policy;
pub mod report;

pub use config::{ExperimentConfig, SweepParam};
pub use env::{stream_rng, Environment, SlotOutcome};
pub use episode::{run_episode, run_experiment, Episode, EpisodeSummary, ExperimentReport, SlotMetrics};
pub use policy::{decide_baseline, decide_from_q, decide_proposed, PolicyKind};
pub use report::{MetricsRow, SummaryRow};
