//! Discrete-time simulation and learning for AoI-aware radio resource
//! management in a Manhattan-grid vehicle-to-vehicle network.
//!
//! The crate is organised bottom-up:
//!
//! - [`mobility`]: road grid, Manhattan mobility, trailing transmitters, link classes.
//! - [`phy`]: path loss, capacity cap, transmit power, arrivals, drops and AoI.
//! - [`clustering`]: spectral grouping of VUE-pairs for frequency reuse.
//! - [`mdp`]: utility, tabular SARSA (joint and per-pair), greedy decomposed
//!   decisions and a value-iteration oracle for small instances.
//! - [`drqn`]: LSTM-based deep recurrent Q-network with BPTT, Adam, replay and
//!   the offline training loop.
//! - [`harness`]: configuration, the slot loop, baselines, sweeps and CSV reports.

pub mod clustering;
pub mod drqn;
pub mod error;
pub mod harness;
pub mod mdp;
pub mod mobility;
pub mod phy;

pub use error::{Error, Result};
