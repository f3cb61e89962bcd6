use alloc::vec::Vec;
use core::f64::consts::{E, PI};

use rand::Rng;

use super::mlp::Mlp;
use crate::error::{Error, Result};
use crate::Vec2;

/// Observation length of the driving policy: herder, target, obstacle center.
pub const OBS_DIM: usize = 6;
/// Action length: planar velocity.
pub const ACT_DIM: usize = 2;
pub const HIDDEN_LAYERS: usize = 5;
pub const HIDDEN_WIDTH: usize = 64;

/// Conventions shared by training and inference, stored in the weights header.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyMeta {
    /// Observations are divided by this before the network (the
    /// initialization radius).
    pub obs_scale: f64,
    /// Network actions are multiplied by this to obtain velocities.
    pub action_scale: f64,
    /// Obstacle center reported when a scene has no obstacles.
    pub sentinel: Vec2,
}

impl PolicyMeta {
    pub fn new(init_radius: f64, v_herder: f64) -> Self {
        Self {
            obs_scale: init_radius,
            action_scale: v_herder,
            sentinel: Vec2::new(2.0 * init_radius, 2.0 * init_radius),
        }
    }
}

/// Actor–critic pair with a state-independent diagonal Gaussian head.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    /// Maps a normalized observation to the action mean.
    pub actor: Mlp,
    /// Maps a normalized observation to a value estimate.
    pub critic: Mlp,
    pub log_std: [f64; ACT_DIM],
    pub meta: PolicyMeta,
}

/// `[in, 64, 64, 64, 64, 64, out]`.
pub fn standard_dims(input: usize, output: usize) -> Vec<usize> {
    let mut dims = Vec::with_capacity(HIDDEN_LAYERS + 2);
    dims.push(input);
    dims.extend(core::iter::repeat(HIDDEN_WIDTH).take(HIDDEN_LAYERS));
    dims.push(output);
    dims
}

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

impl GaussianPolicy {
    /// Fresh policy: orthogonal init with gain sqrt(2) on hidden layers,
    /// 0.01 on the actor output, 1 on the critic output, zero biases and
    /// unit standard deviation.
    pub fn init<R: Rng + ?Sized>(actor_dims: &[usize], critic_dims: &[usize], meta: PolicyMeta, rng: &mut R) -> Result<Self> {
        let actor = Mlp::orthogonal(actor_dims, core::f64::consts::SQRT_2, 0.01, rng)?;
        let critic = Mlp::orthogonal(critic_dims, core::f64::consts::SQRT_2, 1.0, rng)?;
        Self::from_parts(actor, critic, [0.0; ACT_DIM], meta)
    }

    /// Standard 6 -> 5x64 -> {2, 1} architecture.
    pub fn standard<R: Rng + ?Sized>(meta: PolicyMeta, rng: &mut R) -> Result<Self> {
        Self::init(&standard_dims(OBS_DIM, ACT_DIM), &standard_dims(OBS_DIM, 1), meta, rng)
    }

    pub fn from_parts(actor: Mlp, critic: Mlp, log_std: [f64; ACT_DIM], meta: PolicyMeta) -> Result<Self> {
        if actor.output_dim() != ACT_DIM || critic.output_dim() != 1 {
            return Err(Error::Config(alloc::format!(
                "actor must output {ACT_DIM} values and critic 1, got {} and {}",
                actor.output_dim(),
                critic.output_dim()
            )));
        }
        if actor.input_dim() != critic.input_dim() {
            return Err(Error::Config("actor and critic input dims differ".into()));
        }
        if !log_std.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("log_std must be finite".into()));
        }
        Ok(Self { actor, critic, log_std, meta })
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn std(&self) -> [f64; ACT_DIM] {
        [libm::exp(self.log_std[0]), libm::exp(self.log_std[1])]
    }

    /// Total trainable parameters: actor, then log-std, then critic.
    pub fn num_params(&self) -> usize {
        self.actor.num_params() + ACT_DIM + self.critic.num_params()
    }

    /// Copies all trainable parameters into one vector (actor, log-std, critic).
    pub fn flat_params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.num_params());
        v.extend_from_slice(self.actor.params());
        v.extend_from_slice(&self.log_std);
        v.extend_from_slice(self.critic.params());
        v
    }

    /// Mutable views in [`GaussianPolicy::flat_params`] order.
    pub fn param_segments_mut(&mut self) -> [&mut [f64]; 3] {
        [self.actor.params_mut(), &mut self.log_std, self.critic.params_mut()]
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Config("flat parameter length mismatch".into()));
        }
        let mut offset = 0;
        for seg in self.param_segments_mut() {
            seg.copy_from_slice(&flat[offset..offset + seg.len()]);
            offset += seg.len();
        }
        Ok(())
    }

    /// Action means for a `batch x obs_dim` block of normalized observations.
    pub fn mean_batch(&self, obs: &[f64], batch: usize) -> Result<Vec<f64>> {
        self.actor.predict_batch(obs, batch)
    }

    pub fn value_batch(&self, obs: &[f64], batch: usize) -> Result<Vec<f64>> {
        self.critic.predict_batch(obs, batch)
    }

    /// Diagonal Gaussian log-density of `action` given `mean`.
    pub fn log_prob_given_mean(&self, mean: &[f64], action: &[f64]) -> f64 {
        mean.iter()
            .zip(action)
            .zip(&self.log_std)
            .map(|((&m, &a), &ls)| {
                let z = (a - m) * libm::exp(-ls);
                -0.5 * z * z - ls - HALF_LN_2PI
            })
            .sum()
    }

    /// Differential entropy of the action distribution.
    pub fn entropy(&self) -> f64 {
        let half_ln_2pi_e = 0.5 * libm::log(2.0 * PI * E);
        self.log_std.iter().map(|ls| half_ln_2pi_e + ls).sum()
    }

    /// Log-density of `action`, entropy, and the critic's value at `obs`
    /// (a normalized observation).
    pub fn log_prob_and_entropy(&self, obs: &[f64], action: &[f64]) -> Result<(f64, f64, f64)> {
        if action.len() != ACT_DIM {
            return Err(Error::Config("action must have two entries".into()));
        }
        let mean = self.actor.predict(obs)?;
        let value = self.critic.predict(obs)?[0];
        Ok((self.log_prob_given_mean(&mean, action), self.entropy(), value))
    }
}

/// Free-function form of [`GaussianPolicy::log_prob_and_entropy`].
pub fn log_prob_and_entropy(policy: &GaussianPolicy, obs: &[f64], action: &[f64]) -> Result<(f64, f64, f64)> {
    policy.log_prob_and_entropy(obs, action)
}
