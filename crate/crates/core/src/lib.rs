//! Storehouse: a seedable warehouse storage simulator exposed as a
//! reinforcement-learning environment.
//!
//! The crate is layered bottom-up:
//!
//! - [`config`]: the environment parameterization and its TOML schema.
//! - [`sim`]: ground-truth world dynamics (grid, queues, orders, aging).
//! - [`env`]: the agent-facing facade (observation tensor, action
//!   classification, reward, `reset`/`step`).
//! - [`policies`]: random and the two hand-written baseline controllers.
//! - [`metrics`]: per-episode metrics, aggregation and the episode CSV.
//! - [`episode`]: a runner that drives any [`policies::Policy`] through
//!   whole episodes.
//! - [`doe`]: all-pairs hyperparameter suite generation and sweeps.
//! - [`render`]: ASCII rendering of a warehouse state.

pub mod config;
pub mod doe;
pub mod env;
pub mod episode;
pub mod grid;
pub mod metrics;
pub mod policies;
pub mod render;
pub mod sim;

pub use config::{ConfigError, MaterialSpec, WarehouseConfig};
pub use env::{Action, ActionClass, Env, EnvError, StateTensor, StepInfo, StepResult};
pub use grid::Coord;
pub use metrics::EpisodeMetrics;
pub use sim::{Material, Warehouse};
