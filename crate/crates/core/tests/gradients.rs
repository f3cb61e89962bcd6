//! Analytic gradients against central finite differences.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use shepherd_core::dynamics::{obstacle_force, obstacle_potential, WorldParams};
use shepherd_core::geometry::{sample_obstacle_field, ObstacleField, ObstacleShape, Regions};
use shepherd_core::nn::{GaussianPolicy, Mlp, PolicyMeta};
use shepherd_core::rl::ppo::{minibatch_loss, Minibatch};
use shepherd_core::rl::PpoConfig;
use shepherd_core::rng::seeded;
use shepherd_core::Vec2;

fn total_potential(q: Vec2, field: &ObstacleField, params: &WorldParams) -> f64 {
    field.obstacles.iter().map(|o| obstacle_potential(o.signed_distance(q), params)).sum()
}

fn close(analytic: f64, numeric: f64, rel: f64, abs: f64) -> bool {
    (analytic - numeric).abs() <= rel * analytic.abs().max(numeric.abs()) + abs
}

#[test]
fn obstacle_force_is_minus_potential_gradient() {
    let params = WorldParams::default();
    let regions = Regions::default();
    let mut rng = seeded(2024);
    let mut checked = 0;
    while checked < 1000 {
        let field = sample_obstacle_field(3, &regions, &ObstacleShape::default(), params.d_obstacle, &mut rng).unwrap();
        for _ in 0..50 {
            let o = &field.obstacles[rng.random_range(0..3)];
            let q = o.center + Vec2::new(rng.random_range(-8.0..8.0), rng.random_range(-4.0..4.0));
            let s = field.min_signed_distance(q);
            // Stay clear of the distance floor, where the force is held constant.
            if !(0.1..=2.5).contains(&s) {
                continue;
            }
            let h = 1e-6;
            let fd = Vec2::new(
                -(total_potential(q + Vec2::X * h, &field, &params) - total_potential(q - Vec2::X * h, &field, &params)) / (2.0 * h),
                -(total_potential(q + Vec2::Y * h, &field, &params) - total_potential(q - Vec2::Y * h, &field, &params)) / (2.0 * h),
            );
            let f = obstacle_force(q, &field, &params);
            let rel = (f - fd).norm() / f.norm();
            assert!(rel <= 1e-5, "q {q:?} s {s}: analytic {f:?} numeric {fd:?} rel {rel:e}");
            checked += 1;
        }
    }
}

fn random_vec(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

#[test]
fn mlp_backward_matches_finite_differences() {
    let mut rng = seeded(7);
    for depth in 1..=5 {
        for trial in 0..4 {
            let mut dims = vec![rng.random_range(1..6)];
            for _ in 0..depth {
                dims.push(rng.random_range(2..8));
            }
            let batch = 1 + trial;
            let mut net = Mlp::orthogonal(&dims, 1.3, 0.7, &mut rng).unwrap();
            // Nonzero biases so every unit is exercised.
            let n = net.num_params();
            let noise = random_vec(n, &mut rng);
            for (p, z) in net.params_mut().iter_mut().zip(noise) {
                *p += 0.1 * z;
            }
            let x = random_vec(batch * dims[0], &mut rng);
            let w = random_vec(batch * dims[depth], &mut rng);
            let loss = |net: &Mlp, x: &[f64]| -> f64 {
                net.predict_batch(x, batch).unwrap().iter().zip(&w).map(|(o, w)| o * w).sum()
            };
            let (_, cache) = net.forward_batch(&x, batch).unwrap();
            let g = net.backward(&cache, &w).unwrap();
            let h = 1e-6;
            for k in 0..n {
                let mut plus = net.clone();
                plus.params_mut()[k] += h;
                let mut minus = net.clone();
                minus.params_mut()[k] -= h;
                let fd = (loss(&plus, &x) - loss(&minus, &x)) / (2.0 * h);
                assert!(close(g.params[k], fd, 1e-4, 1e-7), "dims {dims:?} param {k}: {} vs {fd}", g.params[k]);
            }
            for k in 0..x.len() {
                let mut xp = x.clone();
                xp[k] += h;
                let mut xm = x.clone();
                xm[k] -= h;
                let fd = (loss(&net, &xp) - loss(&net, &xm)) / (2.0 * h);
                assert!(close(g.input[k], fd, 1e-4, 1e-7), "dims {dims:?} input {k}: {} vs {fd}", g.input[k]);
            }
        }
    }
}

#[test]
fn ppo_loss_gradient_matches_finite_differences() {
    let mut rng = seeded(31);
    let config = PpoConfig::default();
    for trial in 0..5 {
        let mut policy =
            GaussianPolicy::init(&[6, 5, 4, 2], &[6, 4, 5, 1], PolicyMeta::new(25.0, 8.0), &mut rng).unwrap();
        policy.log_std = [0.3 * (trial as f64 - 2.0), -0.2];
        // Zero biases put units with all-dead inputs exactly on a ReLU kink.
        let jitter: Vec<f64> = policy.flat_params().iter().map(|p| p + 0.1 * rng.random_range(-1.0..1.0)).collect();
        policy.set_flat_params(&jitter).unwrap();
        let b = 4;
        let obs = random_vec(b * 6, &mut rng);
        let means = policy.mean_batch(&obs, b).unwrap();
        let actions: Vec<f64> = means.iter().map(|m| m + rng.random_range(-1.0..1.0)).collect();
        // Old log-probs spread so that some samples sit in the clipped region.
        let old: Vec<f64> = (0..b)
            .map(|i| {
                let lp = policy.log_prob_given_mean(&means[2 * i..2 * i + 2], &actions[2 * i..2 * i + 2]);
                lp + [0.05, -0.5, 0.4, -0.1][i]
            })
            .collect();
        let adv = random_vec(b, &mut rng);
        let ret = random_vec(b, &mut rng);
        let mb = Minibatch { observations: &obs, actions: &actions, old_log_probs: &old, advantages: &adv, returns: &ret };
        let mut grads = vec![0.0; policy.num_params()];
        minibatch_loss(&policy, &mb, &config, Some(&mut grads)).unwrap();
        let flat = policy.flat_params();
        let h = 1e-6;
        let eval = |flat: &[f64]| {
            let mut p = policy.clone();
            p.set_flat_params(flat).unwrap();
            minibatch_loss(&p, &mb, &config, None).unwrap().total
        };
        for k in 0..flat.len() {
            let mut plus = flat.clone();
            plus[k] += h;
            let mut minus = flat.clone();
            minus[k] -= h;
            let fd = (eval(&plus) - eval(&minus)) / (2.0 * h);
            assert!(close(grads[k], fd, 1e-4, 1e-7), "trial {trial} param {k}: {} vs {fd}", grads[k]);
        }
    }
}
