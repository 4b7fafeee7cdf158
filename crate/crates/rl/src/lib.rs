//! Value-based learning for the storehouse environment.
//!
//! A small DQN: fully connected Q-network trained with plain SGD on
//! one-step TD targets drawn from a replay buffer, a Polyak-averaged target
//! network and a linearly decaying ε-greedy behaviour policy. The
//! [`Variant::Vam`] flavour applies the environment's valid-action mask both
//! when choosing actions and when bootstrapping.

pub mod checkpoint;
pub mod dqn;
pub mod hyper;
pub mod net;
pub mod replay;
pub mod train;

pub use checkpoint::{Checkpoint, CheckpointError};
pub use dqn::{epsilon_at, polyak_update, select_action, td_update, DqnError, Variant};
pub use hyper::{HyperError, Hyperparameters, PRESETS};
pub use net::Mlp;
pub use replay::{ReplayBuffer, Transition};
pub use train::{evaluate, train, CurvePoint, QPolicy, TrainError, TrainOutcome};
