//! Wire types.

use serde::{Deserialize, Serialize};
use storehouse_core::{ActionClass, Coord};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "lowercase", deny_unknown_fields)]
pub enum Request {
    Spec,
    Reset {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Step {
        action: ActionRef,
    },
    Close,
}

/// An action as `[row, col]` or as the flat index `row * cols + col`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ActionRef {
    Cell(Coord),
    Index(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecResponse {
    pub version: u32,
    pub r: usize,
    pub c: usize,
    pub d: usize,
    pub m: usize,
    pub actions: usize,
    pub max_steps: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfoWire {
    pub step: u64,
    pub valid_action_mask: Vec<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub action_class: Option<ActionClass>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delivered_box_age: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oldest_available_age: Option<u32>,
}

/// Answer to `reset` (reward 0, not done) and `step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResponse {
    pub observation: Vec<Vec<Vec<u8>>>,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfoWire,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloseResponse {
    pub closed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorCode {
    /// The line is not JSON.
    Malformed,
    /// JSON, but not a known request shape.
    BadRequest,
    /// `step` before any `reset`.
    NoEpisode,
    /// `step` after the episode ended.
    EpisodeFinished,
    /// Action outside the grid.
    OutOfBounds,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: ErrorCode,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub error: ErrorBody,
}
