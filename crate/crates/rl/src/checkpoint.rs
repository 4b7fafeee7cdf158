//! JSON model checkpoints.
//!
//! ```json
//! {"format": "storehouse-qnet", "version": 1, "variant": "vam", "seed": 7,
//!  "sizes": [288, 64, 64, 36], "params": [...],
//!  "hyperparameters": {...}, "config": "<TOML text>"}
//! ```
//!
//! `params` uses the flat layout of [`Mlp`]. Floats round-trip exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dqn::Variant;
use crate::hyper::Hyperparameters;
use crate::net::Mlp;

pub const CHECKPOINT_FORMAT: &str = "storehouse-qnet";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub variant: Variant,
    pub seed: u64,
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
    pub hyperparameters: Hyperparameters,
    /// The environment configuration the network was trained on.
    pub config: String,
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed checkpoint: {0}")]
    Json(#[from] serde_json::Error),
    #[error("not a {CHECKPOINT_FORMAT} v{CHECKPOINT_VERSION} checkpoint (found {0} v{1})")]
    Format(String, u32),
    #[error("{params} parameters do not fit layer sizes {sizes:?}")]
    Shape { sizes: Vec<usize>, params: usize },
}

impl Checkpoint {
    pub fn new(network: &Mlp, variant: Variant, seed: u64, hyperparameters: Hyperparameters, config: String) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            variant,
            seed,
            sizes: network.sizes().to_vec(),
            params: network.params().to_vec(),
            hyperparameters,
            config,
        }
    }

    pub fn network(&self) -> Result<Mlp, CheckpointError> {
        Mlp::from_params(&self.sizes, self.params.clone()).ok_or_else(|| CheckpointError::Shape {
            sizes: self.sizes.clone(),
            params: self.params.len(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CheckpointError> {
        let ckpt: Checkpoint = serde_json::from_str(text)?;
        if ckpt.format != CHECKPOINT_FORMAT || ckpt.version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Format(ckpt.format, ckpt.version));
        }
        ckpt.network()?;
        Ok(ckpt)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CheckpointError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
