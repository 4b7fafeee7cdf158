use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Named presets accepted by [`Hyperparameters::preset`].
pub const PRESETS: [&str; 3] = ["default-dqn", "tuned-dqn", "desk"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparameters {
    /// SGD learning rate.
    pub alpha: f64,
    pub gamma: f64,
    /// Polyak coefficient; 1 is a hard copy.
    pub tau: f64,
    /// Share of `max_training_steps` over which ε decays.
    pub exploration_fraction: f64,
    pub epsilon_max: f64,
    pub epsilon_min: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    /// Environment steps between target-network updates.
    pub target_update_interval: usize,
    pub max_training_steps: usize,
    /// Environment steps collected before the first gradient step.
    pub learning_starts: usize,
    /// Environment steps between gradient steps.
    pub train_freq: usize,
    pub hidden: Vec<usize>,
    /// Kept for external actor-critic runs; DQN ignores them.
    pub vf_coef: f64,
    pub clip_range: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            alpha: 0.001,
            gamma: 0.99,
            tau: 1.0,
            exploration_fraction: 0.1,
            epsilon_max: 1.0,
            epsilon_min: 0.05,
            buffer_capacity: 50_000,
            batch_size: 32,
            target_update_interval: 1_000,
            max_training_steps: 100_000,
            learning_starts: 1_000,
            train_freq: 4,
            hidden: vec![128, 128],
            vf_coef: 0.5,
            clip_range: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HyperError {
    #[error("unknown preset {0:?} (known: default-dqn, tuned-dqn, desk)")]
    UnknownPreset(String),
    #[error("{field} = {value} is out of range ({range})")]
    OutOfRange {
        field: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("epsilon_min {min} exceeds epsilon_max {max}")]
    EpsilonOrder { min: f64, max: f64 },
    #[error("hidden layer sizes must be positive")]
    EmptyLayer,
    #[error("malformed hyperparameter document: {0}")]
    Parse(String),
}

impl Hyperparameters {
    pub fn preset(name: &str) -> Result<Self, HyperError> {
        let base = Hyperparameters::default();
        match name {
            "default-dqn" => Ok(base),
            "tuned-dqn" => Ok(Hyperparameters {
                tau: 0.1,
                gamma: 0.23,
                exploration_fraction: 0.0125,
                ..base
            }),
            // Small network and fast schedule for minute-scale CPU runs.
            "desk" => Ok(Hyperparameters {
                alpha: 0.01,
                gamma: 0.5,
                tau: 0.1,
                exploration_fraction: 0.3,
                buffer_capacity: 20_000,
                target_update_interval: 100,
                max_training_steps: 40_000,
                learning_starts: 500,
                hidden: vec![64, 64],
                ..base
            }),
            other => Err(HyperError::UnknownPreset(other.to_string())),
        }
    }

    /// Parses a TOML document; missing keys keep the default-dqn values.
    pub fn from_toml(text: &str) -> Result<Self, HyperError> {
        let hp: Hyperparameters = toml::from_str(text).map_err(|e| HyperError::Parse(e.to_string()))?;
        hp.validate()?;
        Ok(hp)
    }

    pub fn validate(&self) -> Result<(), HyperError> {
        let check = |field, value: f64, ok: bool, range| {
            if ok {
                Ok(())
            } else {
                Err(HyperError::OutOfRange { field, value, range })
            }
        };
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        check("alpha", self.alpha, self.alpha > 0.0 && self.alpha.is_finite(), "> 0")?;
        check("gamma", self.gamma, self.gamma > 0.0 && self.gamma < 1.0, "(0, 1)")?;
        check("tau", self.tau, unit(self.tau), "[0, 1]")?;
        check(
            "exploration_fraction",
            self.exploration_fraction,
            self.exploration_fraction > 0.0 && self.exploration_fraction <= 1.0,
            "(0, 1]",
        )?;
        check("epsilon_max", self.epsilon_max, unit(self.epsilon_max), "[0, 1]")?;
        check("epsilon_min", self.epsilon_min, unit(self.epsilon_min), "[0, 1]")?;
        check("vf_coef", self.vf_coef, unit(self.vf_coef), "[0, 1]")?;
        check("clip_range", self.clip_range, unit(self.clip_range), "[0, 1]")?;
        for (field, v) in [
            ("buffer_capacity", self.buffer_capacity),
            ("batch_size", self.batch_size),
            ("target_update_interval", self.target_update_interval),
            ("max_training_steps", self.max_training_steps),
            ("train_freq", self.train_freq),
        ] {
            check(field, v as f64, v > 0, ">= 1")?;
        }
        if self.epsilon_min > self.epsilon_max {
            return Err(HyperError::EpsilonOrder {
                min: self.epsilon_min,
                max: self.epsilon_max,
            });
        }
        if self.hidden.contains(&0) {
            return Err(HyperError::EmptyLayer);
        }
        Ok(())
    }
}
