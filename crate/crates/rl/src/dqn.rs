//! The pieces of one DQN update: exploration schedule, action selection,
//! TD targets and the target-network update.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hyper::Hyperparameters;
use crate::net::Mlp;
use crate::replay::Transition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Plain DQN over the full action space.
    Dqn,
    /// Valid-action mask: invalid actions are never chosen nor bootstrapped.
    Vam,
}

impl Variant {
    pub fn is_masked(self) -> bool {
        self == Variant::Vam
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Dqn => "dqn",
            Variant::Vam => "vam",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dqn" | "plain" => Ok(Variant::Dqn),
            "vam" => Ok(Variant::Vam),
            other => Err(format!("unknown variant {other:?} (expected dqn or vam)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DqnError {
    #[error("parameter shapes differ: {0} vs {1}")]
    ShapeMismatch(usize, usize),
    #[error("masked selection with no valid action")]
    NoValidAction,
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite TD loss {0}")]
    NonFiniteLoss(f64),
}

/// Linear decay from `epsilon_max` at step 0 to `epsilon_min` at
/// `exploration_fraction * max_training_steps`, flat afterwards.
pub fn epsilon_at(step: usize, hp: &Hyperparameters) -> f64 {
    let horizon = hp.exploration_fraction * hp.max_training_steps as f64;
    let progress = step as f64 / horizon;
    if progress >= 1.0 {
        hp.epsilon_min
    } else {
        hp.epsilon_max + (hp.epsilon_min - hp.epsilon_max) * progress
    }
}

/// `target <- tau * online + (1 - tau) * target`.
pub fn polyak_update(target: &mut Mlp, online: &Mlp, tau: f64) -> Result<(), DqnError> {
    if target.sizes() != online.sizes() {
        return Err(DqnError::ShapeMismatch(target.params().len(), online.params().len()));
    }
    for (t, &o) in target.params_mut().iter_mut().zip(online.params()) {
        *t = tau * o + (1.0 - tau) * *t;
    }
    Ok(())
}

/// Highest-valued action among those `allowed`; ties go to the lowest index.
fn argmax(q: &[f64], allowed: impl Fn(usize) -> bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in q.iter().enumerate() {
        if allowed(i) && best.is_none_or(|b| v > q[b]) {
            best = Some(i);
        }
    }
    best
}

/// ε-greedy choice over all actions, or over valid ones when `masked`.
pub fn select_action(
    q: &[f64],
    mask: &[bool],
    epsilon: f64,
    rng: &mut impl Rng,
    masked: bool,
) -> Result<usize, DqnError> {
    let allowed = |i: usize| !masked || mask[i];
    let explore = rng.gen::<f64>() < epsilon;
    if explore {
        let choices: Vec<usize> = (0..q.len()).filter(|&i| allowed(i)).collect();
        if choices.is_empty() {
            return Err(DqnError::NoValidAction);
        }
        Ok(choices[rng.gen_range(0..choices.len())])
    } else {
        argmax(q, allowed).ok_or(DqnError::NoValidAction)
    }
}

/// Network input: tensor bytes scaled to `[0, 1]`.
pub fn scale_observation(obs: &[u8]) -> Vec<f64> {
    obs.iter().map(|&v| f64::from(v) / 255.0).collect()
}

/// One-step targets `r + gamma * (1 - done) * max_a' Q_target(s', a')`. The
/// masked variant maximizes over valid next actions only; a next state with
/// no valid action at all falls back to the full set.
pub fn td_targets(batch: &[&Transition], target: &Mlp, gamma: f64, variant: Variant) -> Vec<f64> {
    batch
        .iter()
        .map(|t| {
            if t.done {
                return t.reward;
            }
            let q = target.forward(&scale_observation(&t.next_observation));
            let masked = variant.is_masked() && t.next_mask.iter().any(|&v| v);
            let best = argmax(&q, |i| !masked || t.next_mask[i]).expect("non-empty action space");
            t.reward + gamma * q[best]
        })
        .collect()
}

/// Loss `0.5 * mean((Q(s, a) - y)^2)` and its gradient w.r.t. `online`.
pub fn td_loss_and_grad(online: &Mlp, batch: &[&Transition], targets: &[f64]) -> (f64, Vec<f64>) {
    let n = batch.len() as f64;
    let mut grad = vec![0.0; online.params().len()];
    let mut loss = 0.0;
    let mut grad_out = vec![0.0; online.output_len()];
    for (t, &y) in batch.iter().zip(targets) {
        let trace = online.forward_trace(&scale_observation(&t.observation));
        let delta = trace.output()[t.action] - y;
        loss += 0.5 * delta * delta / n;
        grad_out.fill(0.0);
        grad_out[t.action] = delta / n;
        online.backward(&trace, &grad_out, &mut grad);
    }
    (loss, grad)
}

/// Loss alone, for finite-difference checks.
pub fn td_loss(online: &Mlp, batch: &[&Transition], targets: &[f64]) -> f64 {
    let n = batch.len() as f64;
    batch
        .iter()
        .zip(targets)
        .map(|(t, &y)| {
            let d = online.forward(&scale_observation(&t.observation))[t.action] - y;
            0.5 * d * d / n
        })
        .sum()
}

/// One SGD step on a batch; returns the pre-update loss.
pub fn td_update(
    batch: &[&Transition],
    online: &mut Mlp,
    target: &Mlp,
    hp: &Hyperparameters,
    variant: Variant,
) -> Result<f64, DqnError> {
    if batch.is_empty() {
        return Err(DqnError::EmptyBatch);
    }
    let targets = td_targets(batch, target, hp.gamma, variant);
    let (loss, grad) = td_loss_and_grad(online, batch, &targets);
    if !loss.is_finite() {
        return Err(DqnError::NonFiniteLoss(loss));
    }
    online.sgd_step(&grad, hp.alpha);
    Ok(loss)
}
