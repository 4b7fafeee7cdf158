use std::sync::Arc;

use serde::Serialize;
use storehouse_core::env::StateTensor;
use storehouse_core::{Action, Env, EnvError, StepResult, WarehouseConfig};

use crate::protocol::{
    ActionRef, CloseResponse, ErrorBody, ErrorCode, ErrorResponse, Request, SpecResponse, StepInfoWire, StepResponse,
    PROTOCOL_VERSION,
};

/// Protocol state for one connection.
#[derive(Debug)]
pub struct Session {
    pub id: u64,
    config: Arc<WarehouseConfig>,
    env: Option<Env>,
}

/// Outcome of one request line.
#[derive(Debug, Clone, PartialEq)]
pub struct Reply {
    pub line: String,
    /// The client asked to close the session.
    pub close: bool,
}

fn to_line(value: &impl Serialize) -> String {
    serde_json::to_string(value).expect("wire types serialize")
}

fn error(code: ErrorCode, message: impl Into<String>) -> String {
    to_line(&ErrorResponse {
        error: ErrorBody {
            code,
            message: message.into(),
        },
    })
}

impl Session {
    pub fn new(id: u64, config: Arc<WarehouseConfig>) -> Self {
        Session { id, config, env: None }
    }

    pub fn spec(&self) -> SpecResponse {
        let c = &self.config;
        SpecResponse {
            version: PROTOCOL_VERSION,
            r: c.rows,
            c: c.cols,
            d: c.depth(),
            m: c.material_count(),
            actions: c.action_count(),
            max_steps: c.max_steps_per_episode,
        }
    }

    /// Handles one request line. Errors never end the session.
    pub fn handle_line(&mut self, line: &str) -> Reply {
        let value: serde_json::Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(e) => return self.reply(error(ErrorCode::Malformed, e.to_string())),
        };
        match serde_json::from_value::<Request>(value) {
            Ok(req) => self.handle(req),
            Err(e) => self.reply(error(ErrorCode::BadRequest, e.to_string())),
        }
    }

    pub fn handle(&mut self, req: Request) -> Reply {
        match req {
            Request::Spec => self.reply(to_line(&self.spec())),
            Request::Reset { seed } => {
                let seed = seed.unwrap_or(self.config.seed);
                let env = self.env.insert(Env::new(Arc::clone(&self.config), seed));
                let line = to_line(&reset_response(env.observe(), env.mask()));
                self.reply(line)
            }
            Request::Step { action } => {
                let Some(env) = self.env.as_mut() else {
                    return self.reply(error(ErrorCode::NoEpisode, "send reset before step"));
                };
                let action = match action {
                    ActionRef::Cell(at) => Action(at),
                    ActionRef::Index(i) if i < self.config.action_count() => Action::from_index(i, self.config.cols),
                    ActionRef::Index(i) => {
                        return self.reply(error(ErrorCode::OutOfBounds, format!("action index {i} out of range")))
                    }
                };
                let line = match env.step(action) {
                    Ok(result) => to_line(&step_response(result)),
                    Err(e @ EnvError::EpisodeFinished(_)) => error(ErrorCode::EpisodeFinished, e.to_string()),
                    Err(e @ EnvError::OutOfBounds(_)) => error(ErrorCode::OutOfBounds, e.to_string()),
                    Err(e) => error(ErrorCode::Internal, e.to_string()),
                };
                self.reply(line)
            }
            Request::Close => {
                self.env = None;
                Reply {
                    line: to_line(&CloseResponse { closed: true }),
                    close: true,
                }
            }
        }
    }

    fn reply(&self, line: String) -> Reply {
        Reply { line, close: false }
    }
}

pub fn reset_response(observation: StateTensor, mask: Vec<bool>) -> StepResponse {
    StepResponse {
        observation: observation.to_nested(),
        reward: 0.0,
        done: false,
        info: StepInfoWire {
            step: 0,
            valid_action_mask: mask,
            action_class: None,
            delivered_box_age: None,
            oldest_available_age: None,
        },
    }
}

pub fn step_response(result: StepResult) -> StepResponse {
    StepResponse {
        observation: result.observation.to_nested(),
        reward: result.reward,
        done: result.done,
        info: StepInfoWire {
            step: result.info.step,
            valid_action_mask: result.info.valid_action_mask,
            action_class: Some(result.info.action_class),
            delivered_box_age: result.info.delivered_box_age,
            oldest_available_age: result.info.oldest_available_age,
        },
    }
}
