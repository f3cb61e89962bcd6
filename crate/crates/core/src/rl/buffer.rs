use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::nn::{ACT_DIM, OBS_DIM};

/// One step of experience.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    /// Normalized observation the action was taken in.
    pub observation: [f64; OBS_DIM],
    /// Raw (unclamped, network-unit) action.
    pub action: [f64; ACT_DIM],
    pub log_prob: f64,
    /// Reward, including the discounted bootstrap value on truncation.
    pub reward: f64,
    pub value: f64,
    pub done: bool,
}

/// Transitions stored environment-major: index `env * rollout_length + step`.
#[derive(Debug, Clone)]
pub struct RolloutBuffer {
    pub rollout_length: usize,
    pub num_envs: usize,
    pub transitions: Vec<Transition>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBuffer {
    pub fn new(rollout_length: usize, num_envs: usize) -> Self {
        Self {
            rollout_length,
            num_envs,
            transitions: Vec::with_capacity(rollout_length * num_envs),
            advantages: Vec::new(),
            returns: Vec::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.rollout_length * self.num_envs
    }

    pub fn is_full(&self) -> bool {
        self.transitions.len() == self.capacity()
    }

    /// Builds a full buffer from per-environment sequences.
    pub fn from_envs(per_env: Vec<Vec<Transition>>) -> Result<Self> {
        let num_envs = per_env.len();
        let rollout_length = per_env.first().map_or(0, Vec::len);
        if per_env.iter().any(|v| v.len() != rollout_length) {
            return Err(Error::Config("ragged rollout".into()));
        }
        let mut buf = Self::new(rollout_length, num_envs);
        buf.transitions = per_env.into_iter().flatten().collect();
        Ok(buf)
    }

    /// Fills `advantages` and `returns`; `bootstrap[e]` is the value of the
    /// observation following the last stored step of environment `e`.
    pub fn compute_advantages(&mut self, bootstrap: &[f64], discount: f64, gae_lambda: f64) -> Result<()> {
        if !self.is_full() || bootstrap.len() != self.num_envs {
            return Err(Error::Config("advantages need a full buffer and one bootstrap value per env".into()));
        }
        let t = self.rollout_length;
        self.advantages = vec![0.0; self.capacity()];
        self.returns = vec![0.0; self.capacity()];
        for e in 0..self.num_envs {
            let seg = &self.transitions[e * t..(e + 1) * t];
            let rewards: Vec<f64> = seg.iter().map(|x| x.reward).collect();
            let values: Vec<f64> = seg.iter().map(|x| x.value).collect();
            let dones: Vec<bool> = seg.iter().map(|x| x.done).collect();
            let (adv, ret) = compute_gae(&rewards, &values, &dones, bootstrap[e], discount, gae_lambda);
            self.advantages[e * t..(e + 1) * t].copy_from_slice(&adv);
            self.returns[e * t..(e + 1) * t].copy_from_slice(&ret);
        }
        Ok(())
    }

    /// Standardized copy of the advantages (mean 0, std 1; std floored at 1e-8).
    pub fn standardized_advantages(&self) -> Vec<f64> {
        standardize(&self.advantages)
    }
}

pub fn standardize(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    if values.is_empty() {
        return Vec::new();
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = libm::sqrt(var).max(1e-8);
    values.iter().map(|v| (v - mean) / std).collect()
}

/// Generalized advantage estimation over one environment's steps.
///
/// `delta_t = r_t + gamma v_{t+1} (1 - done_t) - v_t` and
/// `A_t = delta_t + gamma lambda (1 - done_t) A_{t+1}`, where `v_{T}` is
/// `bootstrap`. Returns `(advantages, advantages + values)`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: f64,
    discount: f64,
    gae_lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut next_value = bootstrap;
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + discount * next_value * live - values[t];
        next_adv = delta + discount * gae_lambda * live * next_adv;
        adv[t] = next_adv;
        next_value = values[t];
    }
    let ret = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, ret)
}
