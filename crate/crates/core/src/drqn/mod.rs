//! Deep recurrent Q-network shared by all pairs.

pub mod adam;
pub mod checkpoint;
pub mod features;
pub mod loss;
pub mod network;
pub mod replay;
pub mod train;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, RngState};
pub use features::{FeatureNorms, FEATURE_DIM};
pub use loss::loss_and_grad;
pub use network::{DrqnParams, ForwardCache, NetShape};
pub use replay::{batch_steps, Experience, ObservationPool, ReplayMemory};
pub use train::{loss_moving_average, sync_target, train_from_config, train_offline, LossPoint, TrainConfig, TrainOutcome};
