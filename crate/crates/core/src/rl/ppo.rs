//! Clipped-surrogate PPO update.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use super::buffer::RolloutBuffer;
use super::PpoConfig;
use crate::error::{Error, Result};
use crate::nn::{AdamState, GaussianPolicy, ACT_DIM, OBS_DIM};

/// Row-major views of one minibatch.
#[derive(Debug, Clone, Copy)]
pub struct Minibatch<'a> {
    pub observations: &'a [f64],
    pub actions: &'a [f64],
    pub old_log_probs: &'a [f64],
    pub advantages: &'a [f64],
    pub returns: &'a [f64],
}

impl Minibatch<'_> {
    pub fn len(&self) -> usize {
        self.old_log_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.old_log_probs.is_empty()
    }
}

/// Loss components of one minibatch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossTerms {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

/// Averages over the minibatches of one update.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossReport {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub grad_norm: f64,
    pub minibatches: usize,
}

/// `-mean(min(rho A, clip(rho) A)) + c_v mean((V - R)^2) - c_e H`.
///
/// When `grads` is given it is overwritten with the gradient with respect to
/// the policy's flat parameters (actor, log-std, critic).
pub fn minibatch_loss(
    policy: &GaussianPolicy,
    mb: &Minibatch<'_>,
    config: &PpoConfig,
    grads: Option<&mut [f64]>,
) -> Result<LossTerms> {
    let b = mb.len();
    if b == 0
        || mb.observations.len() != b * OBS_DIM
        || mb.actions.len() != b * ACT_DIM
        || mb.advantages.len() != b
        || mb.returns.len() != b
    {
        return Err(Error::Config("inconsistent minibatch shapes".into()));
    }
    let bf = b as f64;
    let (means, actor_cache) = policy.actor.forward_batch(mb.observations, b)?;
    let (values, critic_cache) = policy.critic.forward_batch(mb.observations, b)?;
    let inv_std = [libm::exp(-policy.log_std[0]), libm::exp(-policy.log_std[1])];
    let entropy = policy.entropy();

    let mut d_mean = vec![0.0; b * ACT_DIM];
    let mut d_log_std = [0.0; ACT_DIM];
    let mut d_value = vec![0.0; b];
    let (mut policy_loss, mut value_loss, mut clipped, mut kl) = (0.0, 0.0, 0usize, 0.0);
    for i in 0..b {
        let mut z = [0.0; ACT_DIM];
        for k in 0..ACT_DIM {
            z[k] = (mb.actions[i * ACT_DIM + k] - means[i * ACT_DIM + k]) * inv_std[k];
        }
        let log_prob = policy.log_prob_given_mean(&means[i * ACT_DIM..(i + 1) * ACT_DIM], &mb.actions[i * ACT_DIM..(i + 1) * ACT_DIM]);
        let log_ratio = log_prob - mb.old_log_probs[i];
        let ratio = libm::exp(log_ratio);
        let a = mb.advantages[i];
        let unclipped = ratio * a;
        let clipped_term = ratio.clamp(1.0 - config.clip, 1.0 + config.clip) * a;
        policy_loss -= unclipped.min(clipped_term);
        if libm::fabs(ratio - 1.0) > config.clip {
            clipped += 1;
        }
        kl += (ratio - 1.0) - log_ratio;
        // d(policy loss)/d(log_prob_i)
        let g = if unclipped <= clipped_term { -a * ratio / bf } else { 0.0 };
        for k in 0..ACT_DIM {
            d_mean[i * ACT_DIM + k] = g * z[k] * inv_std[k];
            d_log_std[k] += g * (z[k] * z[k] - 1.0);
        }
        let err = values[i] - mb.returns[i];
        value_loss += err * err;
        d_value[i] = config.value_coef * 2.0 * err / bf;
    }
    policy_loss /= bf;
    value_loss /= bf;
    let total = policy_loss + config.value_coef * value_loss - config.entropy_coef * entropy;
    if !total.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite PPO loss (policy {policy_loss}, value {value_loss}, entropy {entropy})"
        )));
    }
    if let Some(grads) = grads {
        if grads.len() != policy.num_params() {
            return Err(Error::Config("gradient buffer has the wrong length".into()));
        }
        grads.iter_mut().for_each(|g| *g = 0.0);
        let na = policy.actor.num_params();
        let (actor_g, rest) = grads.split_at_mut(na);
        let (log_std_g, critic_g) = rest.split_at_mut(ACT_DIM);
        policy.actor.backward_into(&actor_cache, &d_mean, actor_g)?;
        for k in 0..ACT_DIM {
            log_std_g[k] = d_log_std[k] - config.entropy_coef;
        }
        policy.critic.backward_into(&critic_cache, &d_value, critic_g)?;
    }
    Ok(LossTerms {
        total,
        policy: policy_loss,
        value: value_loss,
        entropy,
        clip_fraction: clipped as f64 / bf,
        approx_kl: kl / bf,
    })
}

/// Rescales `grads` so its Euclidean norm is at most `max_norm`. Returns the
/// norm before clipping.
pub fn clip_grad_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = libm::sqrt(grads.iter().map(|g| g * g).sum::<f64>());
    if norm > max_norm {
        let scale = max_norm / (norm + 1e-6);
        grads.iter_mut().for_each(|g| *g *= scale);
    }
    norm
}

/// Runs `epochs` passes of shuffled minibatch updates over a buffer whose
/// advantages have been computed.
pub fn ppo_update<R: Rng + ?Sized>(
    policy: &mut GaussianPolicy,
    buffer: &RolloutBuffer,
    optimizer: &mut AdamState,
    config: &PpoConfig,
    rng: &mut R,
) -> Result<LossReport> {
    let n = buffer.transitions.len();
    if !buffer.is_full() || buffer.advantages.len() != n {
        return Err(Error::Config("ppo_update needs a full buffer with advantages".into()));
    }
    let advantages = buffer.standardized_advantages();
    let mb_size = n / config.minibatches;
    if mb_size == 0 {
        return Err(Error::Config("minibatch size is zero".into()));
    }
    let mut obs = vec![0.0; mb_size * OBS_DIM];
    let mut act = vec![0.0; mb_size * ACT_DIM];
    let mut old_lp = vec![0.0; mb_size];
    let mut adv = vec![0.0; mb_size];
    let mut ret = vec![0.0; mb_size];
    let mut grads = vec![0.0; policy.num_params()];
    let mut order: Vec<usize> = (0..n).collect();
    let mut report = LossReport::default();
    for _ in 0..config.epochs {
        order.shuffle(rng);
        for chunk in order.chunks_exact(mb_size).take(config.minibatches) {
            for (slot, &idx) in chunk.iter().enumerate() {
                let t = &buffer.transitions[idx];
                obs[slot * OBS_DIM..(slot + 1) * OBS_DIM].copy_from_slice(&t.observation);
                act[slot * ACT_DIM..(slot + 1) * ACT_DIM].copy_from_slice(&t.action);
                old_lp[slot] = t.log_prob;
                adv[slot] = advantages[idx];
                ret[slot] = buffer.returns[idx];
            }
            let mb = Minibatch {
                observations: &obs,
                actions: &act,
                old_log_probs: &old_lp,
                advantages: &adv,
                returns: &ret,
            };
            let terms = minibatch_loss(policy, &mb, config, Some(&mut grads))?;
            let norm = clip_grad_norm(&mut grads, config.grad_clip_norm);
            if !norm.is_finite() {
                return Err(Error::Numeric(format!("non-finite gradient norm at minibatch {}", report.minibatches)));
            }
            optimizer.step(&mut policy.param_segments_mut(), &grads)?;
            report.policy_loss += terms.policy;
            report.value_loss += terms.value;
            report.entropy += terms.entropy;
            report.clip_fraction += terms.clip_fraction;
            report.approx_kl += terms.approx_kl;
            report.grad_norm += norm;
            report.minibatches += 1;
        }
    }
    let m = report.minibatches.max(1) as f64;
    report.policy_loss /= m;
    report.value_loss /= m;
    report.entropy /= m;
    report.clip_fraction /= m;
    report.approx_kl /= m;
    report.grad_norm /= m;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::PolicyMeta;
    use crate::rng::seeded;
    use rand_distr::{Distribution, StandardNormal};

    fn tiny() -> GaussianPolicy {
        GaussianPolicy::init(&[6, 5, 2], &[6, 5, 1], PolicyMeta::new(25.0, 8.0), &mut seeded(21)).unwrap()
    }

    #[test]
    fn identical_policy_has_unit_ratio() {
        let p = tiny();
        let mut rng = seeded(4);
        let b = 16;
        let obs: Vec<f64> = (0..b * 6).map(|_| StandardNormal.sample(&mut rng)).collect();
        let means = p.actor.predict_batch(&obs, b).unwrap();
        let actions: Vec<f64> = means.iter().map(|m| m + 0.3 * rng.random::<f64>()).collect();
        let old: Vec<f64> = (0..b)
            .map(|i| p.log_prob_given_mean(&means[2 * i..2 * i + 2], &actions[2 * i..2 * i + 2]))
            .collect();
        let adv: Vec<f64> = (0..b).map(|i| i as f64 - 7.0).collect();
        let ret = vec![0.0; b];
        let mb = Minibatch { observations: &obs, actions: &actions, old_log_probs: &old, advantages: &adv, returns: &ret };
        let terms = minibatch_loss(&p, &mb, &PpoConfig::default(), None).unwrap();
        let mean_adv = adv.iter().sum::<f64>() / b as f64;
        assert!((terms.policy + mean_adv).abs() < 1e-12);
        assert_eq!(terms.clip_fraction, 0.0);
        assert!(terms.approx_kl.abs() < 1e-12);
    }

    #[test]
    fn grad_clipping_caps_norm() {
        let mut g = vec![3.0, 4.0];
        assert_eq!(clip_grad_norm(&mut g, 0.5), 5.0);
        let n = (g[0] * g[0] + g[1] * g[1]).sqrt();
        assert!((n - 0.5).abs() < 1e-6);
        let mut small = vec![0.1, 0.1];
        clip_grad_norm(&mut small, 0.5);
        assert_eq!(small, vec![0.1, 0.1]);
    }
}
