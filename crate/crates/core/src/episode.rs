//! Drives a [`Policy`] through whole episodes.

use std::sync::Arc;

use rayon::prelude::*;

use crate::config::WarehouseConfig;
use crate::env::{Env, StepResult};
use crate::metrics::{EpisodeMetrics, EpisodeRow, MetricsRecorder};
use crate::policies::{Ehp, Ihp, Policy, PolicyInput, RandomPolicy};
use crate::sim::{DeliveryRecord, Warehouse};

#[derive(Debug, Clone)]
pub struct EpisodeOutcome {
    pub metrics: EpisodeMetrics,
    pub rewards: Vec<f64>,
    pub deliveries: Vec<DeliveryRecord>,
}

/// Environment seed of episode `episode` in the run seeded with `base`.
pub fn episode_seed(base: u64, episode: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = base
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(episode.wrapping_add(1).wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn run_episode(config: Arc<WarehouseConfig>, policy: &mut dyn Policy, seed: u64) -> EpisodeOutcome {
    run_episode_with(config, policy, seed, |_, _, _| {})
}

/// Like [`run_episode`], calling `inspect(before, result, after)` after every
/// step.
pub fn run_episode_with<F>(
    config: Arc<WarehouseConfig>,
    policy: &mut dyn Policy,
    seed: u64,
    mut inspect: F,
) -> EpisodeOutcome
where
    F: FnMut(&Warehouse, &StepResult, &Warehouse),
{
    let mut env = Env::new(config, seed);
    let mut observation = env.observe();
    let mut mask = env.mask();
    let mut recorder = MetricsRecorder::new();
    let mut rewards = Vec::with_capacity(env.config().max_steps_per_episode as usize);
    loop {
        let before = env.sim().clone();
        let action = policy.act(PolicyInput {
            sim: &before,
            observation: &observation,
            mask: &mask,
        });
        let result = env.step(action).expect("episode is running and action in bounds");
        recorder.observe(&result, env.sim());
        inspect(&before, &result, env.sim());
        rewards.push(result.reward);
        if result.done {
            break;
        }
        observation = result.observation;
        mask = result.info.valid_action_mask;
    }
    EpisodeOutcome {
        metrics: recorder.finish(),
        rewards,
        deliveries: env.sim().delivered_log().to_vec(),
    }
}

pub const BASELINES: [&str; 3] = ["random", "ihp", "ehp"];

/// A baseline policy by CLI name.
pub fn baseline(name: &str, seed: u64) -> Option<Box<dyn Policy + Send>> {
    match name {
        "random" => Some(Box::new(RandomPolicy::new(seed))),
        "ihp" => Some(Box::new(Ihp)),
        "ehp" => Some(Box::new(Ehp)),
        _ => None,
    }
}

/// Runs `episodes` episodes for each seed, seeds in parallel. Rows come
/// back ordered by seed position, then episode.
pub fn run_seeds<F>(
    config: Arc<WarehouseConfig>,
    seeds: &[u64],
    episodes: usize,
    make_policy: F,
) -> Vec<EpisodeRow>
where
    F: Fn(u64) -> Box<dyn Policy + Send> + Sync,
{
    seeds
        .par_iter()
        .map(|&seed| {
            let mut policy = make_policy(seed);
            (0..episodes)
                .map(|e| {
                    let out = run_episode(Arc::clone(&config), policy.as_mut(), episode_seed(seed, e as u64));
                    EpisodeRow {
                        episode: e,
                        policy: policy.name().to_string(),
                        seed,
                        metrics: out.metrics,
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}
