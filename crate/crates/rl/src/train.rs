//! Training loop, greedy evaluation and the learned policy.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use storehouse_core::episode::{episode_seed, run_episode};
use storehouse_core::metrics::{EpisodeMetrics, MetricsRecorder};
use storehouse_core::policies::{Policy, PolicyInput};
use storehouse_core::{Action, Env, WarehouseConfig};
use thiserror::Error;

use crate::dqn::{epsilon_at, polyak_update, scale_observation, select_action, td_update, DqnError, Variant};
use crate::hyper::{HyperError, Hyperparameters};
use crate::net::Mlp;
use crate::replay::{ReplayBuffer, Transition};

/// Per-episode training log entry.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub episode: usize,
    pub score: f64,
    /// ε at the end of the episode.
    pub epsilon: f64,
    /// Mean TD loss over the episode's gradient steps, if any.
    pub loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub network: Mlp,
    pub curve: Vec<CurvePoint>,
    pub metrics: Vec<EpisodeMetrics>,
    pub steps: usize,
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Hyper(#[from] HyperError),
    #[error("training diverged at episode {episode}, step {step}: {reason}")]
    Diverged {
        episode: usize,
        step: usize,
        reason: String,
    },
    #[error(transparent)]
    Dqn(#[from] DqnError),
    #[error("episode length must be positive")]
    EmptyEpisode,
}

pub fn layer_sizes(config: &WarehouseConfig, hp: &Hyperparameters) -> Vec<usize> {
    let mut sizes = vec![config.rows * config.cols * config.depth()];
    sizes.extend(&hp.hidden);
    sizes.push(config.action_count());
    sizes
}

/// Chooses among the mask only when it leaves something to choose.
fn use_mask(variant: Variant, mask: &[bool]) -> bool {
    variant.is_masked() && mask.iter().any(|&v| v)
}

/// Trains one network for `hp.max_training_steps` environment steps.
/// Episode `e` runs on environment seed `episode_seed(seed, e)`; an episode
/// cut short by the step budget is dropped from the logs.
pub fn train(
    config: Arc<WarehouseConfig>,
    hp: &Hyperparameters,
    variant: Variant,
    seed: u64,
) -> Result<TrainOutcome, TrainError> {
    hp.validate()?;
    if config.max_steps_per_episode == 0 {
        return Err(TrainError::EmptyEpisode);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut online = Mlp::new(&layer_sizes(&config, hp), &mut rng);
    let mut target = online.clone();
    let mut buffer = ReplayBuffer::new(hp.buffer_capacity);
    let mut env = Env::new(Arc::clone(&config), seed);

    let mut curve = Vec::new();
    let mut metrics = Vec::new();
    let mut steps = 0usize;
    'episodes: for episode in 0.. {
        let mut obs = env.reset(episode_seed(seed, episode as u64));
        let mut mask = env.mask();
        let mut recorder = MetricsRecorder::new();
        let (mut loss_sum, mut updates) = (0.0, 0usize);
        loop {
            if steps >= hp.max_training_steps {
                break 'episodes;
            }
            let q = online.forward(&scale_observation(obs.as_slice()));
            let epsilon = epsilon_at(steps, hp);
            let a = select_action(&q, &mask, epsilon, &mut rng, use_mask(variant, &mask))?;
            let result = env
                .step(Action::from_index(a, config.cols))
                .expect("action index within the grid on a running episode");
            recorder.observe(&result, env.sim());
            steps += 1;
            buffer.push(Transition {
                observation: obs.as_slice().to_vec(),
                action: a,
                reward: result.reward,
                next_observation: result.observation.as_slice().to_vec(),
                done: result.done,
                next_mask: result.info.valid_action_mask.clone(),
            });

            if steps > hp.learning_starts && steps.is_multiple_of(hp.train_freq) {
                let batch = buffer.sample(hp.batch_size, &mut rng);
                let loss = td_update(&batch, &mut online, &target, hp, variant).map_err(|e| TrainError::Diverged {
                    episode,
                    step: steps,
                    reason: e.to_string(),
                })?;
                if !online.is_finite() {
                    return Err(TrainError::Diverged {
                        episode,
                        step: steps,
                        reason: format!("non-finite network parameters after loss {loss}"),
                    });
                }
                loss_sum += loss;
                updates += 1;
            }
            if steps.is_multiple_of(hp.target_update_interval) {
                polyak_update(&mut target, &online, hp.tau)?;
            }

            if result.done {
                let m = recorder.finish();
                curve.push(CurvePoint {
                    episode,
                    score: m.score,
                    epsilon,
                    loss: (updates > 0).then(|| loss_sum / updates as f64),
                });
                metrics.push(m);
                break;
            }
            obs = result.observation;
            mask = result.info.valid_action_mask;
        }
    }
    Ok(TrainOutcome {
        network: online,
        curve,
        metrics,
        steps,
    })
}

/// Greedy policy over a trained network.
#[derive(Debug, Clone)]
pub struct QPolicy {
    network: Mlp,
    variant: Variant,
}

impl QPolicy {
    pub fn new(network: Mlp, variant: Variant) -> Self {
        QPolicy { network, variant }
    }

    pub fn network(&self) -> &Mlp {
        &self.network
    }
}

impl Policy for QPolicy {
    fn name(&self) -> &str {
        match self.variant {
            Variant::Dqn => "dqn",
            Variant::Vam => "vam",
        }
    }

    fn act(&mut self, input: PolicyInput<'_>) -> Action {
        let q = self.network.forward(&scale_observation(input.observation.as_slice()));
        let masked = use_mask(self.variant, input.mask);
        let a = (0..q.len())
            .filter(|&i| !masked || input.mask[i])
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if q[b] >= q[i] => Some(b),
                _ => Some(i),
            })
            .expect("non-empty action space");
        Action::from_index(a, input.sim.config().cols)
    }
}

/// Greedy episodes on `episode_seed(seed, e)` for `e < episodes`.
pub fn evaluate(
    config: Arc<WarehouseConfig>,
    network: &Mlp,
    variant: Variant,
    seed: u64,
    episodes: usize,
) -> Vec<EpisodeMetrics> {
    let mut policy = QPolicy::new(network.clone(), variant);
    (0..episodes)
        .map(|e| run_episode(Arc::clone(&config), &mut policy, episode_seed(seed, e as u64)).metrics)
        .collect()
}

pub const CURVE_CSV_HEADER: &str = "episode,score,epsilon,loss";

/// Training curve as CSV; the loss column is empty before learning starts.
pub fn curve_csv(curve: &[CurvePoint]) -> String {
    let mut out = format!("{CURVE_CSV_HEADER}\n");
    for p in curve {
        let loss = p.loss.map(|l| l.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{}", p.episode, p.score, p.epsilon, loss).unwrap();
    }
    out
}
