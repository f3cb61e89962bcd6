//! PPO training of the single-herder driving policy.

pub mod buffer;
pub mod env;
pub mod ppo;
pub mod reward;
pub mod train;

pub use buffer::{compute_gae, RolloutBuffer, Transition};
pub use env::{reset_episode, DrivingEnv, StepOutcome};
pub use ppo::{ppo_update, LossReport, Minibatch};
pub use reward::{driving_reward, RewardGains};
pub use train::{train, EpisodeLog, NullSink, TrainingOutcome, TrainingSink, UpdateLog};

use crate::error::{Error, Result};

/// PPO hyperparameters and the training curriculum.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PpoConfig {
    pub discount: f64,
    pub gae_lambda: f64,
    pub clip: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub grad_clip_norm: f64,
    /// Steps collected per environment before each update.
    pub rollout_length: usize,
    pub num_envs: usize,
    pub epochs: usize,
    pub minibatches: usize,
    pub learning_rate: f64,
    /// Probability that a training episode starts the target behind the obstacle.
    pub p_obstacle: f64,
    /// Steps after which a training episode is truncated.
    pub episode_cap: usize,
    /// Training stops after the update in which this many episodes (summed
    /// over all environments) have finished.
    pub total_episodes: usize,
    /// Checkpoint period in updates (0 disables checkpoints).
    pub checkpoint_every: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            discount: 0.98,
            gae_lambda: 0.95,
            clip: 0.2,
            entropy_coef: 0.01,
            value_coef: 0.5,
            grad_clip_norm: 0.5,
            rollout_length: 4096,
            num_envs: 8,
            epochs: 10,
            minibatches: 128,
            learning_rate: 5e-4,
            p_obstacle: 0.5,
            episode_cap: 2000,
            total_episodes: 100_000,
            checkpoint_every: 50,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("discount", self.discount),
            ("gae_lambda", self.gae_lambda),
            ("entropy_coef", self.entropy_coef),
            ("value_coef", self.value_coef),
            ("grad_clip_norm", self.grad_clip_norm),
            ("learning_rate", self.learning_rate),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(alloc::format!("{name} must be > 0")));
            }
        }
        if self.discount > 1.0 || self.gae_lambda > 1.0 {
            return Err(Error::Config("discount and gae_lambda must be <= 1".into()));
        }
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return Err(Error::Config("clip must lie in (0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&self.p_obstacle) {
            return Err(Error::Config("p_obstacle must lie in [0, 1]".into()));
        }
        let counts = [
            ("rollout_length", self.rollout_length),
            ("num_envs", self.num_envs),
            ("epochs", self.epochs),
            ("minibatches", self.minibatches),
            ("episode_cap", self.episode_cap),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(alloc::format!("{name} must be > 0")));
            }
        }
        if self.minibatches > self.rollout_length * self.num_envs {
            return Err(Error::Config("more minibatches than transitions per update".into()));
        }
        Ok(())
    }

    pub fn batch_size(&self) -> usize {
        self.rollout_length * self.num_envs
    }

    pub fn minibatch_size(&self) -> usize {
        self.batch_size() / self.minibatches
    }
}
