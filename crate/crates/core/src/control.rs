//! Hierarchical herder control: each herder picks a target with a
//! decentralized nearest-herder rule, then a driving law (learned policy or
//! vortex heuristic) computes its velocity toward pushing that target home.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dynamics::{NoiseSource, WorldParams, WorldState};
use crate::error::Result;
use crate::geometry::{ObstacleField, Regions};
use crate::nn::{GaussianPolicy, OBS_DIM};
use crate::rng::{self, tag};
use crate::Vec2;

/// Input of the driving policy: own position, assigned target, nearest
/// obstacle center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrivingObservation {
    pub herder: Vec2,
    pub target: Vec2,
    pub obstacle_center: Vec2,
}

impl DrivingObservation {
    /// `[H, T, P]` flattened.
    pub fn to_array(&self) -> [f64; OBS_DIM] {
        [
            self.herder.x,
            self.herder.y,
            self.target.x,
            self.target.y,
            self.obstacle_center.x,
            self.obstacle_center.y,
        ]
    }

    pub fn normalized(&self, scale: f64) -> [f64; OBS_DIM] {
        self.to_array().map(|v| v / scale)
    }
}

/// Outcome of target selection for one herder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assignment {
    pub herder_index: usize,
    /// `None` puts the herder in fallback mode.
    pub selected_target: Option<usize>,
}

/// Whether herder `j` is strictly the closest herder to `target`.
fn strictly_nearest(j: usize, target: Vec2, herders: &[Vec2]) -> bool {
    let dj = target.distance(herders[j]);
    herders
        .iter()
        .enumerate()
        .all(|(a, &h)| a == j || dj < target.distance(h))
}

/// Among targets outside the goal for which `herder_index` is strictly the
/// nearest herder, picks the one farthest from the goal (lowest index on ties).
pub fn select_target(herder_index: usize, state: &WorldState, regions: &Regions) -> Assignment {
    let mut best: Option<(usize, f64)> = None;
    for (i, &t) in state.targets.iter().enumerate() {
        if regions.in_goal(t) || !strictly_nearest(herder_index, t, &state.herders) {
            continue;
        }
        let r = t.norm();
        if best.is_none_or(|(_, br)| r > br) {
            best = Some((i, r));
        }
    }
    Assignment {
        herder_index,
        selected_target: best.map(|(i, _)| i),
    }
}

/// Runs [`select_target`] for every herder.
pub fn assign_all(state: &WorldState, regions: &Regions) -> Vec<Assignment> {
    (0..state.herders.len())
        .map(|j| select_target(j, state, regions))
        .collect()
}

/// Goal-boundary gap below which the fallback command is zero.
pub const FALLBACK_TOLERANCE: f64 = 1e-3;

/// Velocity toward the nearest point of the goal circle, at speed `v_herder`
/// but never overshooting the circle within one step.
pub fn fallback_control(herder: Vec2, regions: &Regions, params: &WorldParams) -> Vec2 {
    let r = herder.norm();
    let gap = r - regions.goal_radius;
    if libm::fabs(gap) <= FALLBACK_TOLERANCE {
        return Vec2::ZERO;
    }
    let radial = herder.try_normalize().unwrap_or(Vec2::X);
    let dir = if gap > 0.0 { -radial } else { radial };
    let speed = params.v_herder.min(libm::fabs(gap) / params.dt);
    (dir * speed).clamp_box(params.v_herder)
}

/// Index of the obstacle nearest to `q` by signed distance. Ties within
/// 1e-9 are broken by `tie_break(count)`, which must return an index below
/// `count`.
pub fn nearest_obstacle<F: FnOnce(usize) -> usize>(
    q: Vec2,
    field: &ObstacleField,
    tie_break: F,
) -> Option<usize> {
    let dists: Vec<f64> = field.obstacles.iter().map(|o| o.signed_distance(q)).collect();
    let min = dists.iter().copied().fold(f64::INFINITY, f64::min);
    let tied: Vec<usize> = (0..dists.len()).filter(|&k| dists[k] - min <= 1e-9).collect();
    match tied.len() {
        0 => None,
        1 => Some(tied[0]),
        n => Some(tied[tie_break(n) % n]),
    }
}

/// Assembles `[H_j, T_selected, P_nearest]`. Ties between equally near
/// obstacles are resolved with the herder's own stream for this step. With no
/// obstacles, `sentinel` stands in for the obstacle center.
pub fn build_observation(
    herder_index: usize,
    target_index: usize,
    state: &WorldState,
    field: &ObstacleField,
    sentinel: Vec2,
    noise: &NoiseSource,
) -> DrivingObservation {
    let herder = state.herders[herder_index];
    let nearest = nearest_obstacle(herder, field, |n| {
        let mut s = rng::substream(
            noise.episode_seed,
            &[tag::OBSERVATION_TIE, state.time_step, herder_index as u64],
        );
        s.random_range(0..n)
    });
    DrivingObservation {
        herder,
        target: state.targets[target_index],
        obstacle_center: nearest.map_or(sentinel, |k| field.obstacles[k].center),
    }
}

/// Gains of the vortex heuristic.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct VortexParams {
    /// Distance of the steering point behind the target, and the standoff
    /// the herder keeps from it.
    pub standoff: f64,
    pub attraction_gain: f64,
    pub standoff_gain: f64,
    pub vortex_gain: f64,
}

impl Default for VortexParams {
    fn default() -> Self {
        Self {
            standoff: 1.25,
            attraction_gain: 4.0,
            standoff_gain: 8.0,
            vortex_gain: 6.0,
        }
    }
}

/// Scales `v` down so that `|v|_inf <= bound`, keeping its direction.
pub fn limit_box(v: Vec2, bound: f64) -> Vec2 {
    let m = v.norm_inf();
    if m > bound {
        v * (bound / m)
    } else {
        v
    }
}

/// Direction the target should travel: straight at the goal, bent along the
/// face of any obstacle that lies in the way so the target slides toward the
/// nearer end instead of being pinned against it.
pub fn target_heading(target: Vec2, field: &ObstacleField, params: &WorldParams) -> Vec2 {
    let goal = (-target).try_normalize().unwrap_or(Vec2::X);
    let mut heading = goal;
    for o in &field.obstacles {
        let s = o.signed_distance(target);
        let n = o.outward_normal(target);
        if s > params.d_obstacle || n.dot(goal) >= 0.0 {
            continue;
        }
        let along = if (target - o.center).dot(o.orientation) >= 0.0 { o.orientation } else { -o.orientation };
        let prefer = along + goal;
        let tangent = if n.perp().dot(prefer) >= 0.0 { n.perp() } else { -n.perp() };
        let w = ((params.d_obstacle - s.max(0.0)) / params.d_obstacle).min(1.0);
        heading = heading * (1.0 - w) + tangent * w;
    }
    heading.try_normalize().unwrap_or(goal)
}

/// Point at distance `standoff` behind the target, opposite its heading.
pub fn steering_point(target: Vec2, field: &ObstacleField, params: &WorldParams, standoff: f64) -> Vec2 {
    target - target_heading(target, field, params) * standoff
}

/// Vortex heuristic: attraction to the steering point behind the target, standoff repulsion
/// from the target, and a tangential field around each nearby obstacle that
/// circulates the short way toward the steering point.
pub fn vortex_control(
    obs: &DrivingObservation,
    field: &ObstacleField,
    params: &WorldParams,
    vortex: &VortexParams,
) -> Vec2 {
    let h = obs.herder;
    let sp = steering_point(obs.target, field, params, vortex.standoff);
    let mut u = (sp - h) * vortex.attraction_gain;

    let away = h - obs.target;
    let d = away.norm();
    if d < vortex.standoff {
        let dir = away.try_normalize().unwrap_or_else(|| -obs.target.try_normalize().unwrap_or(Vec2::X));
        u += dir * (vortex.standoff_gain * (vortex.standoff - d));
    }

    for o in &field.obstacles {
        let s = o.signed_distance(h);
        if s > params.d_obstacle {
            continue;
        }
        let n = o.outward_normal(h);
        let turn = (h - o.center).cross(sp - o.center);
        let tangent = if turn >= 0.0 { n.perp() } else { -n.perp() };
        let weight = ((params.d_obstacle - s.max(0.0)) / params.d_obstacle).min(1.0);
        u += tangent * (vortex.vortex_gain * weight);
    }
    limit_box(u, params.v_herder)
}

/// Runs the actor on a normalized observation. Returns the raw action in
/// network units (the mean when `deterministic`, else a Gaussian sample) and
/// the velocity command clamped to the speed box.
pub fn policy_action<R: Rng + ?Sized>(
    obs: &DrivingObservation,
    policy: &GaussianPolicy,
    deterministic: bool,
    rng: &mut R,
) -> Result<([f64; 2], Vec2)> {
    let x = obs.normalized(policy.meta.obs_scale);
    let mean = policy.actor.predict(&x)?;
    let mut a = [mean[0], mean[1]];
    if !deterministic {
        let std = policy.std();
        for k in 0..2 {
            let z: f64 = StandardNormal.sample(rng);
            a[k] += std[k] * z;
        }
    }
    Ok((a, command_from_action(a, policy)))
}

/// Velocity command for a raw network action.
#[inline]
pub fn command_from_action(a: [f64; 2], policy: &GaussianPolicy) -> Vec2 {
    let bound = policy.meta.action_scale;
    (Vec2::from(a) * bound).clamp_box(bound)
}

/// Velocity command from the learned driving policy.
pub fn policy_control<R: Rng + ?Sized>(
    obs: &DrivingObservation,
    policy: &GaussianPolicy,
    deterministic: bool,
    rng: &mut R,
) -> Result<Vec2> {
    policy_action(obs, policy, deterministic, rng).map(|(_, u)| u)
}

/// Low-level driving law used by every herder.
#[derive(Debug, Clone, Copy)]
pub enum Driver<'a> {
    Policy(&'a GaussianPolicy),
    Vortex(VortexParams),
}

/// Controls of all herders for one step: select, then drive or fall back.
/// Policy inference for all engaged herders runs as one batch with the
/// deterministic (mean) action.
pub fn hierarchical_controls(
    state: &WorldState,
    field: &ObstacleField,
    regions: &Regions,
    params: &WorldParams,
    driver: &Driver<'_>,
    noise: &NoiseSource,
) -> Result<Vec<Vec2>> {
    let sentinel = match driver {
        Driver::Policy(p) => p.meta.sentinel,
        Driver::Vortex(_) => Vec2::new(2.0 * regions.init_radius, 2.0 * regions.init_radius),
    };
    let mut controls = alloc::vec![Vec2::ZERO; state.herders.len()];
    let mut engaged = Vec::new();
    let mut batch = Vec::new();
    for a in assign_all(state, regions) {
        let j = a.herder_index;
        match a.selected_target {
            None => controls[j] = fallback_control(state.herders[j], regions, params),
            Some(i) => {
                let obs = build_observation(j, i, state, field, sentinel, noise);
                match driver {
                    Driver::Vortex(v) => controls[j] = vortex_control(&obs, field, params, v),
                    Driver::Policy(p) => {
                        engaged.push(j);
                        batch.extend_from_slice(&obs.normalized(p.meta.obs_scale));
                    }
                }
            }
        }
    }
    if let Driver::Policy(p) = driver {
        if !engaged.is_empty() {
            let means = p.mean_batch(&batch, engaged.len())?;
            for (k, &j) in engaged.iter().enumerate() {
                controls[j] = command_from_action([means[2 * k], means[2 * k + 1]], p);
            }
        }
    }
    Ok(controls)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Obstacle, ObstacleShape};
    use crate::nn::{Mlp, PolicyMeta};
    use alloc::vec;

    fn state(herders: Vec<Vec2>, targets: Vec<Vec2>) -> WorldState {
        WorldState::new(herders, targets).unwrap()
    }

    #[test]
    fn single_herder_takes_farthest() {
        let s = state(
            vec![Vec2::new(0.0, 0.0)],
            vec![Vec2::new(7.0, 0.0), Vec2::new(0.0, -12.0), Vec2::new(1.0, 1.0)],
        );
        let a = select_target(0, &s, &Regions::default());
        assert_eq!(a.selected_target, Some(1));
    }

    #[test]
    fn all_in_goal_gives_none() {
        let s = state(vec![Vec2::new(10.0, 0.0)], vec![Vec2::new(1.0, 0.0), Vec2::new(0.0, 4.9)]);
        assert_eq!(select_target(0, &s, &Regions::default()).selected_target, None);
    }

    #[test]
    fn equidistant_herders_leave_target_unassigned() {
        let s = state(
            vec![Vec2::new(10.0, 1.0), Vec2::new(10.0, -1.0)],
            vec![Vec2::new(10.0, 0.0)],
        );
        assert_eq!(select_target(0, &s, &Regions::default()).selected_target, None);
        assert_eq!(select_target(1, &s, &Regions::default()).selected_target, None);
    }

    #[test]
    fn fallback_examples() {
        let g = Regions::default();
        let p = WorldParams::default();
        assert_eq!(fallback_control(Vec2::new(10.0, 0.0), &g, &p), Vec2::new(-8.0, 0.0));
        assert_eq!(fallback_control(Vec2::new(5.0, 0.0), &g, &p), Vec2::ZERO);
        assert_eq!(fallback_control(Vec2::new(0.0, 3.0), &g, &p), Vec2::new(0.0, 8.0));
        assert_eq!(fallback_control(Vec2::ZERO, &g, &p), Vec2::new(8.0, 0.0));
        // Close to the circle the speed shrinks so the step lands on it.
        let u = fallback_control(Vec2::new(5.02, 0.0), &g, &p);
        assert!((u.x + 2.0).abs() < 1e-9 && u.y == 0.0);
    }

    #[test]
    fn observation_uses_nearest_obstacle_or_sentinel() {
        let shape = ObstacleShape::default();
        let near = Obstacle::facing_goal(Vec2::new(12.0, 0.0), &shape).unwrap();
        let far = Obstacle::facing_goal(Vec2::new(-15.0, 0.0), &shape).unwrap();
        let s = state(vec![Vec2::new(15.0, 2.0)], vec![Vec2::new(9.0, 0.0)]);
        let field = ObstacleField { obstacles: vec![far, near], safety_margin: 3.0 };
        let sentinel = Vec2::new(50.0, 50.0);
        let noise = NoiseSource::new(0);
        let obs = build_observation(0, 0, &s, &field, sentinel, &noise);
        assert_eq!(obs.obstacle_center, near.center);
        assert_eq!(obs.target, Vec2::new(9.0, 0.0));
        let obs = build_observation(0, 0, &s, &ObstacleField::empty(3.0), sentinel, &noise);
        assert_eq!(obs.obstacle_center, sentinel);
    }

    #[test]
    fn tie_between_obstacles_is_seeded() {
        let shape = ObstacleShape::default();
        let a = Obstacle::facing_goal(Vec2::new(0.0, 12.0), &shape).unwrap();
        let b = Obstacle::facing_goal(Vec2::new(0.0, -12.0), &shape).unwrap();
        let field = ObstacleField { obstacles: vec![a, b], safety_margin: 3.0 };
        let s = state(vec![Vec2::new(0.0, 0.0)], vec![Vec2::new(9.0, 0.0)]);
        let mut seen = [false; 2];
        for seed in 0..64 {
            let obs = build_observation(0, 0, &s, &field, Vec2::ZERO, &NoiseSource::new(seed));
            let again = build_observation(0, 0, &s, &field, Vec2::ZERO, &NoiseSource::new(seed));
            assert_eq!(obs, again);
            seen[(obs.obstacle_center == b.center) as usize] = true;
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn vortex_pure_attraction_saturates() {
        let p = WorldParams::default();
        let v = VortexParams::default();
        let obs = DrivingObservation {
            herder: Vec2::new(-10.0, 3.0),
            target: Vec2::new(10.0, 0.0),
            obstacle_center: Vec2::new(50.0, 50.0),
        };
        let u = vortex_control(&obs, &ObstacleField::empty(3.0), &p, &v);
        let sp = steering_point(obs.target, &ObstacleField::empty(3.0), &p, v.standoff);
        assert!((u.norm_inf() - p.v_herder).abs() < 1e-12);
        assert!(u.cross(sp - obs.herder).abs() < 1e-9 && u.dot(sp - obs.herder) > 0.0);
    }

    #[test]
    fn vortex_at_steering_point_is_zero() {
        let p = WorldParams::default();
        let v = VortexParams::default();
        let t = Vec2::new(6.0, 8.0);
        let obs = DrivingObservation { herder: steering_point(t, &ObstacleField::empty(3.0), &p, v.standoff), target: t, obstacle_center: Vec2::ZERO };
        assert!(vortex_control(&obs, &ObstacleField::empty(3.0), &p, &v).norm() < 1e-12);
    }

    #[test]
    fn zero_policy_commands_zero() {
        let meta = PolicyMeta::new(25.0, 8.0);
        let policy = GaussianPolicy::from_parts(
            Mlp::zeros(&[6, 64, 2]).unwrap(),
            Mlp::zeros(&[6, 64, 1]).unwrap(),
            [0.0; 2],
            meta,
        )
        .unwrap();
        let obs = DrivingObservation { herder: Vec2::new(3.0, 4.0), target: Vec2::new(10.0, 0.0), obstacle_center: Vec2::ZERO };
        let u = policy_control(&obs, &policy, true, &mut rng::seeded(0)).unwrap();
        assert_eq!(u, Vec2::ZERO);
    }

    #[test]
    fn stochastic_sample_is_reparameterized_mean() {
        let meta = PolicyMeta::new(25.0, 8.0);
        let mut policy = GaussianPolicy::standard(meta, &mut rng::seeded(3)).unwrap();
        policy.log_std = [-1.0, -2.0];
        let obs = DrivingObservation { herder: Vec2::new(3.0, 4.0), target: Vec2::new(10.0, 0.0), obstacle_center: Vec2::new(0.0, 12.0) };
        let (a, _) = policy_action(&obs, &policy, false, &mut rng::seeded(99)).unwrap();
        let mut z = rng::seeded(99);
        let z0: f64 = StandardNormal.sample(&mut z);
        let z1: f64 = StandardNormal.sample(&mut z);
        let mean = policy.actor.predict(&obs.normalized(25.0)).unwrap();
        let std = policy.std();
        assert!((a[0] - (mean[0] + std[0] * z0)).abs() < 1e-15);
        assert!((a[1] - (mean[1] + std[1] * z1)).abs() < 1e-15);
        let (d1, _) = policy_action(&obs, &policy, true, &mut rng::seeded(1)).unwrap();
        let (d2, _) = policy_action(&obs, &policy, true, &mut rng::seeded(2)).unwrap();
        assert_eq!(d1, d2);
    }
}
