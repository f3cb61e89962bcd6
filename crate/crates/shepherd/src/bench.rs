//! `bench` command: latency of one policy inference per herder.

use std::hint::black_box;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};
use shepherd_core::control::{policy_control, DrivingObservation};
use shepherd_core::geometry::sample_disc;
use shepherd_core::nn::GaussianPolicy;
use shepherd_core::rng::{self, tag};

use crate::error::{Result, RunError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub calls: usize,
    pub mean_ms: f64,
    pub std_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
}

/// Times `calls` deterministic `policy_control` calls on random observations
/// drawn inside the initialization disc.
pub fn bench_policy(policy: &GaussianPolicy, calls: usize, init_radius: f64, seed: u64) -> Result<BenchReport> {
    if calls == 0 {
        return Err(RunError::Config("bench.calls must be > 0".into()));
    }
    let mut rng = rng::substream(seed, &[tag::POLICY, 0x6265_6e63]);
    let observations: Vec<DrivingObservation> = (0..calls.min(4096))
        .map(|_| DrivingObservation {
            herder: sample_disc(init_radius, &mut rng),
            target: sample_disc(init_radius, &mut rng),
            obstacle_center: sample_disc(init_radius, &mut rng) * rng.random_range(0.5..1.0),
        })
        .collect();
    let mut times = Vec::with_capacity(calls);
    for k in 0..calls {
        let obs = &observations[k % observations.len()];
        let start = Instant::now();
        let u = policy_control(black_box(obs), policy, true, &mut rng)?;
        black_box(u);
        times.push(start.elapsed().as_secs_f64() * 1e3);
    }
    let n = times.len() as f64;
    let mean = times.iter().sum::<f64>() / n;
    let var = times.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / n;
    Ok(BenchReport {
        calls,
        mean_ms: mean,
        std_ms: var.sqrt(),
        min_ms: times.iter().copied().fold(f64::INFINITY, f64::min),
        max_ms: times.iter().copied().fold(0.0, f64::max),
    })
}
