//! Cross-boundary determinism check: the same seed and actions must give
//! the same observations and rewards in-process and over the wire.

use std::net::ToSocketAddrs;
use std::sync::Arc;

use sha2::{Digest as _, Sha256};
use storehouse_core::{Action, Coord, Env, WarehouseConfig};
use thiserror::Error;

use crate::client::{Client, ClientError};
use crate::protocol::StepResponse;
use crate::session::{reset_response, step_response};

/// Hex SHA-256 over every observation (bytes in `[row][col][plane]`
/// order) and reward (little-endian IEEE bits), reset observation first.
pub type Digest = String;

/// Per-step records: the reset response, then one per action.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub steps: Vec<StepResponse>,
}

impl Transcript {
    pub fn digest(&self) -> Digest {
        let mut h = Sha256::new();
        for s in &self.steps {
            for cell in s.observation.iter().flatten() {
                h.update(cell);
            }
            h.update(s.reward.to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("in-process run failed at action {index}: {message}")]
    Local { index: usize, message: String },
    #[error(transparent)]
    Wire(#[from] ClientError),
    #[error("transcripts diverge at record {step} (0 is the reset)")]
    Diverged { step: usize },
}

pub fn digest_in_process(config: Arc<WarehouseConfig>, seed: u64, actions: &[Coord]) -> Result<Transcript, ReplayError> {
    let mut env = Env::new(config, seed);
    let mut steps = vec![reset_response(env.observe(), env.mask())];
    for (index, &a) in actions.iter().enumerate() {
        let result = env.step(Action(a)).map_err(|e| ReplayError::Local {
            index,
            message: e.to_string(),
        })?;
        steps.push(step_response(result));
    }
    Ok(Transcript { steps })
}

pub fn digest_over_wire(addr: impl ToSocketAddrs, seed: u64, actions: &[Coord]) -> Result<Transcript, ReplayError> {
    let mut client = Client::connect(addr)?;
    let mut steps = vec![client.reset(Some(seed))?];
    for a in actions {
        steps.push(client.step(a.row, a.col)?);
    }
    client.close()?;
    Ok(Transcript { steps })
}

/// Runs `actions` both ways and returns the shared digest.
pub fn replay_check(
    config: Arc<WarehouseConfig>,
    addr: impl ToSocketAddrs,
    seed: u64,
    actions: &[Coord],
) -> Result<Digest, ReplayError> {
    let local = digest_in_process(config, seed, actions)?;
    let remote = digest_over_wire(addr, seed, actions)?;
    if let Some(step) = local.steps.iter().zip(&remote.steps).position(|(a, b)| a != b) {
        return Err(ReplayError::Diverged { step });
    }
    if local.steps.len() != remote.steps.len() {
        return Err(ReplayError::Diverged {
            step: local.steps.len().min(remote.steps.len()),
        });
    }
    Ok(local.digest())
}
