//! Agent dynamics: overdamped stochastic targets repelled by nearby herders
//! and obstacles, velocity-saturated single-integrator herders, integrated
//! with Euler–Maruyama.

use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::ObstacleField;
use crate::rng::{self, tag, Stream};
use crate::Vec2;

/// Physical constants of the plant.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct WorldParams {
    /// Herder-to-target repulsion gain.
    pub beta: f64,
    /// Herder-to-target interaction radius.
    pub lambda: f64,
    /// Target diffusion coefficient `D`.
    pub diffusion: f64,
    /// Obstacle potential gain.
    pub k_obstacle: f64,
    /// Obstacle potential activation distance; also the spacing margin.
    pub d_obstacle: f64,
    /// Component-wise speed bound on target drift.
    pub v_target: f64,
    /// Component-wise speed bound on herder motion.
    pub v_herder: f64,
    /// Integration step (seconds).
    pub dt: f64,
    /// Floor applied to the obstacle distance inside the force law.
    pub min_distance: f64,
}

impl Default for WorldParams {
    fn default() -> Self {
        Self {
            beta: 3.0,
            lambda: 2.5,
            diffusion: 0.1,
            k_obstacle: 1.0,
            d_obstacle: 3.0,
            v_target: 7.5,
            v_herder: 8.0,
            dt: 0.01,
            min_distance: 0.05,
        }
    }
}

impl WorldParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("beta", self.beta),
            ("lambda", self.lambda),
            ("k_obstacle", self.k_obstacle),
            ("d_obstacle", self.d_obstacle),
            ("v_target", self.v_target),
            ("v_herder", self.v_herder),
            ("dt", self.dt),
            ("min_distance", self.min_distance),
        ];
        for (name, value) in fields {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Config(alloc::format!("{name} must be > 0")));
            }
        }
        // Zero diffusion gives the deterministic plant.
        if !(self.diffusion >= 0.0 && self.diffusion.is_finite()) {
            return Err(Error::Config("diffusion must be >= 0".into()));
        }
        if self.min_distance >= self.d_obstacle {
            return Err(Error::Config(
                "min_distance must be < d_obstacle".into(),
            ));
        }
        Ok(())
    }
}

/// Positions of all agents plus the step counter.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WorldState {
    pub herders: Vec<Vec2>,
    pub targets: Vec<Vec2>,
    pub time_step: u64,
    /// Number of herder controls that arrived outside the speed box and were clamped.
    pub control_clamps: u64,
}

impl WorldState {
    pub fn new(herders: Vec<Vec2>, targets: Vec<Vec2>) -> Result<Self> {
        if herders.is_empty() || targets.is_empty() {
            return Err(Error::Config("need at least one herder and one target".into()));
        }
        if !herders.iter().chain(&targets).all(|p| p.is_finite()) {
            return Err(Error::Numeric("non-finite initial position".into()));
        }
        Ok(Self {
            herders,
            targets,
            time_step: 0,
            control_clamps: 0,
        })
    }
}

/// Source of the target noise. Each (step, target) pair owns its own stream,
/// so trajectories do not depend on evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseSource {
    pub episode_seed: u64,
}

impl NoiseSource {
    pub fn new(episode_seed: u64) -> Self {
        Self { episode_seed }
    }

    pub fn target_stream(&self, step: u64, target: usize) -> Stream {
        rng::substream(self.episode_seed, &[tag::TARGET_NOISE, step, target as u64])
    }

    /// Pair of independent standard normal draws for `target` at `step`.
    pub fn target_noise(&self, step: u64, target: usize) -> Vec2 {
        let mut s = self.target_stream(step, target);
        let x: f64 = StandardNormal.sample(&mut s);
        let y: f64 = StandardNormal.sample(&mut s);
        Vec2::new(x, y)
    }
}

/// Component-wise clamp to `[-bound, bound]`.
#[inline]
pub fn saturate(v: Vec2, bound: f64) -> Vec2 {
    v.clamp_box(bound)
}

/// Magnitude of the obstacle repulsion at signed distance `s`, i.e.
/// `k (1/s - 1/d) / s^2`, evaluated at `max(s, min_distance)`; zero beyond `d`.
#[inline]
pub fn obstacle_force_magnitude(s: f64, params: &WorldParams) -> f64 {
    if s > params.d_obstacle {
        return 0.0;
    }
    let s = s.max(params.min_distance);
    params.k_obstacle * (1.0 / s - 1.0 / params.d_obstacle) / (s * s)
}

/// Obstacle potential `k/2 (1/s - 1/d)^2` for `s <= d`, zero beyond.
pub fn obstacle_potential(s: f64, params: &WorldParams) -> f64 {
    if s > params.d_obstacle {
        return 0.0;
    }
    let s = s.max(params.min_distance);
    let g = 1.0 / s - 1.0 / params.d_obstacle;
    0.5 * params.k_obstacle * g * g
}

/// Short-range repulsion from every obstacle within the activation distance.
pub fn obstacle_force(q: Vec2, field: &ObstacleField, params: &WorldParams) -> Vec2 {
    let mut f = Vec2::ZERO;
    for o in &field.obstacles {
        let s = o.signed_distance(q);
        if s > params.d_obstacle {
            continue;
        }
        f += o.outward_normal(q) * obstacle_force_magnitude(s, params);
    }
    f
}

fn coincident_direction(target: usize, herder: usize) -> Vec2 {
    let h = rng::derive_seed(target as u64, &[herder as u64]);
    let angle = (h >> 11) as f64 / (1u64 << 53) as f64 * 2.0 * core::f64::consts::PI;
    Vec2::from_polar(1.0, angle)
}

/// Harmonic repulsion on target `target_index` from all herders within
/// `lambda`: `beta * (lambda - |d|) * d / |d|` with `d = target - herder`.
pub fn herder_repulsion(
    target_index: usize,
    target: Vec2,
    herders: &[Vec2],
    params: &WorldParams,
) -> Vec2 {
    let mut f = Vec2::ZERO;
    for (j, &h) in herders.iter().enumerate() {
        let d = target - h;
        let dist = d.norm();
        if dist > params.lambda {
            continue;
        }
        if dist < 1e-9 {
            f += coincident_direction(target_index, j) * (params.beta * params.lambda);
        } else {
            f += d * (params.beta * (params.lambda - dist) / dist);
        }
    }
    f
}

/// Saturated deterministic drift of target `i` in the snapshot `state`.
pub fn target_drift(i: usize, state: &WorldState, field: &ObstacleField, params: &WorldParams) -> Vec2 {
    let t = state.targets[i];
    let drift = herder_repulsion(i, t, &state.herders, params) + obstacle_force(t, field, params);
    let drift = saturate(drift, params.v_target);
    debug_assert!(drift.norm_inf() <= params.v_target);
    drift
}

/// One Euler–Maruyama step of every target from the same snapshot.
pub fn target_step(
    state: &WorldState,
    field: &ObstacleField,
    params: &WorldParams,
    noise: &NoiseSource,
) -> Vec<Vec2> {
    let sigma = libm::sqrt(2.0 * params.diffusion * params.dt);
    (0..state.targets.len())
        .map(|i| {
            let drift = target_drift(i, state, field, params);
            let xi = noise.target_noise(state.time_step, i);
            state.targets[i] + drift * params.dt + xi * sigma
        })
        .collect()
}

/// One step of every herder. Returns new positions and the number of
/// controls that had to be clamped into the speed box.
pub fn herder_step(
    state: &WorldState,
    controls: &[Vec2],
    field: &ObstacleField,
    params: &WorldParams,
) -> Result<(Vec<Vec2>, u64)> {
    if controls.len() != state.herders.len() {
        return Err(Error::Config(alloc::format!(
            "expected {} herder controls, got {}",
            state.herders.len(),
            controls.len()
        )));
    }
    let mut clamps = 0;
    let next = state
        .herders
        .iter()
        .zip(controls)
        .map(|(&h, &u)| {
            if u.norm_inf() > params.v_herder {
                clamps += 1;
            }
            let u = saturate(u, params.v_herder);
            let v = saturate(u + obstacle_force(h, field, params), params.v_herder);
            debug_assert!(v.norm_inf() <= params.v_herder);
            h + v * params.dt
        })
        .collect();
    Ok((next, clamps))
}

/// Advances targets and herders one step from the same snapshot.
pub fn world_step(
    state: &WorldState,
    controls: &[Vec2],
    field: &ObstacleField,
    params: &WorldParams,
    noise: &NoiseSource,
) -> Result<WorldState> {
    let (herders, clamps) = herder_step(state, controls, field, params)?;
    let targets = target_step(state, field, params, noise);
    Ok(WorldState {
        herders,
        targets,
        time_step: state.time_step + 1,
        control_clamps: state.control_clamps + clamps,
    })
}
