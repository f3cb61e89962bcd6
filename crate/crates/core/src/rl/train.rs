//! Rollout collection and the outer PPO loop.

use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use super::buffer::{RolloutBuffer, Transition};
use super::env::{DrivingEnv, EnvSettings};
use super::ppo::{ppo_update, LossReport};
use super::reward::RewardGains;
use super::PpoConfig;
use crate::control::command_from_action;
use crate::dynamics::WorldParams;
use crate::error::{Error, Result};
use crate::geometry::{ObstacleShape, Regions};
use crate::nn::{AdamState, GaussianPolicy, PolicyMeta, ACT_DIM, OBS_DIM};
use crate::rng::{self, tag};

/// One finished training episode.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpisodeLog {
    /// Completion order over all environments.
    pub episode: u64,
    pub env_id: u64,
    pub cumulative_reward: f64,
    pub length: usize,
    pub success: bool,
    pub cone_start: bool,
}

/// Summary of one PPO update.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UpdateLog {
    pub update: usize,
    pub episodes_completed: u64,
    pub env_steps: u64,
    pub losses: LossReport,
    pub std: [f64; ACT_DIM],
    /// Over the episodes that finished during this update's rollout.
    pub mean_episode_reward: Option<f64>,
    pub success_rate: Option<f64>,
}

/// Receives training progress. All methods default to doing nothing.
pub trait TrainingSink {
    fn on_episode(&mut self, _log: &EpisodeLog) -> Result<()> {
        Ok(())
    }

    fn on_update(&mut self, _log: &UpdateLog, _policy: &GaussianPolicy) -> Result<()> {
        Ok(())
    }

    fn checkpoint(&mut self, _update: usize, _policy: &GaussianPolicy) -> Result<()> {
        Ok(())
    }
}

/// Sink that discards everything.
pub struct NullSink;

impl TrainingSink for NullSink {}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub policy: GaussianPolicy,
    pub episodes: Vec<EpisodeLog>,
    pub updates: Vec<UpdateLog>,
}

/// Initial policy for a training seed.
pub fn initial_policy(regions: &Regions, world: &WorldParams, seed: u64) -> Result<GaussianPolicy> {
    let mut rng = rng::substream(seed, &[tag::INIT, 0]);
    GaussianPolicy::standard(PolicyMeta::new(regions.init_radius, world.v_herder), &mut rng)
}

/// Trains the driving policy from scratch. Fully determined by `seed`.
#[allow(clippy::too_many_arguments)]
pub fn train<S: TrainingSink + ?Sized>(
    config: &PpoConfig,
    regions: &Regions,
    shape: &ObstacleShape,
    world: &WorldParams,
    gains: &RewardGains,
    seed: u64,
    sink: &mut S,
) -> Result<TrainingOutcome> {
    config.validate()?;
    regions.validate()?;
    world.validate()?;
    gains.validate()?;
    let mut policy = initial_policy(regions, world, seed)?;
    let mut outcome = TrainingOutcome {
        policy: policy.clone(),
        episodes: Vec::new(),
        updates: Vec::new(),
    };
    if config.total_episodes == 0 {
        return Ok(outcome);
    }
    let settings = EnvSettings {
        regions: *regions,
        shape: *shape,
        world: *world,
        gains: *gains,
        config: *config,
        meta: policy.meta,
    };
    let mut envs = (0..config.num_envs as u64)
        .map(|e| DrivingEnv::new(e, seed, &settings))
        .collect::<Result<Vec<_>>>()?;
    let mut optimizer = AdamState::new(policy.num_params(), config.learning_rate);
    let mut episodes_done: u64 = 0;
    let mut env_steps: u64 = 0;
    let mut update = 0usize;
    let n_env = config.num_envs;
    let mut obs = Vec::with_capacity(n_env * OBS_DIM);

    while (episodes_done as usize) < config.total_episodes {
        let mut per_env: Vec<Vec<Transition>> =
            (0..n_env).map(|_| Vec::with_capacity(config.rollout_length)).collect();
        let first_episode_this_update = outcome.episodes.len();
        for _ in 0..config.rollout_length {
            obs.clear();
            for env in &envs {
                obs.extend_from_slice(&env.observation(&policy.meta));
            }
            let means = policy.mean_batch(&obs, n_env)?;
            let values = policy.value_batch(&obs, n_env)?;
            let std = policy.std();
            for (e, env) in envs.iter_mut().enumerate() {
                let mean = &means[e * ACT_DIM..(e + 1) * ACT_DIM];
                let mut action = [0.0; ACT_DIM];
                for k in 0..ACT_DIM {
                    let z: f64 = StandardNormal.sample(env.action_rng());
                    action[k] = mean[k] + std[k] * z;
                }
                let log_prob = policy.log_prob_given_mean(mean, &action);
                let command = command_from_action(action, &policy);
                let step = env.step(command, &settings)?;
                let mut reward = step.reward;
                if step.truncated {
                    // Timeouts are not terminal: fold the discounted value of
                    // the next state into the last reward.
                    let next = env.observation(&policy.meta);
                    reward += config.discount * policy.value_batch(&next, 1)?[0];
                }
                let mut observation = [0.0; OBS_DIM];
                observation.copy_from_slice(&obs[e * OBS_DIM..(e + 1) * OBS_DIM]);
                per_env[e].push(Transition {
                    observation,
                    action,
                    log_prob,
                    reward,
                    value: values[e],
                    done: step.done(),
                });
                if step.done() {
                    let log = EpisodeLog {
                        episode: episodes_done,
                        env_id: env.env_id,
                        cumulative_reward: env.cumulative_reward,
                        length: env.steps,
                        success: step.success,
                        cone_start: env.cone_start,
                    };
                    sink.on_episode(&log)?;
                    outcome.episodes.push(log);
                    episodes_done += 1;
                    env.reset(&settings)?;
                }
            }
            env_steps += n_env as u64;
        }
        obs.clear();
        for env in &envs {
            obs.extend_from_slice(&env.observation(&policy.meta));
        }
        let bootstrap = policy.value_batch(&obs, n_env)?;
        let mut buffer = RolloutBuffer::from_envs(per_env)?;
        buffer.compute_advantages(&bootstrap, config.discount, config.gae_lambda)?;
        let mut shuffle = rng::substream(seed, &[tag::SHUFFLE, update as u64]);
        let losses = ppo_update(&mut policy, &buffer, &mut optimizer, config, &mut shuffle)?;
        if !policy.flat_params().iter().all(|p| p.is_finite()) {
            return Err(Error::Numeric(alloc::format!("non-finite parameters after update {update}")));
        }
        let recent = &outcome.episodes[first_episode_this_update..];
        let n_recent = recent.len() as f64;
        let log = UpdateLog {
            update,
            episodes_completed: episodes_done,
            env_steps,
            losses,
            std: policy.std(),
            mean_episode_reward: (!recent.is_empty())
                .then(|| recent.iter().map(|e| e.cumulative_reward).sum::<f64>() / n_recent),
            success_rate: (!recent.is_empty())
                .then(|| recent.iter().filter(|e| e.success).count() as f64 / n_recent),
        };
        sink.on_update(&log, &policy)?;
        outcome.updates.push(log);
        update += 1;
        if config.checkpoint_every > 0 && update % config.checkpoint_every == 0 {
            sink.checkpoint(update, &policy)?;
        }
    }
    outcome.policy = policy;
    Ok(outcome)
}
