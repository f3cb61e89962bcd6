use rand::Rng;

use super::reward::{driving_reward, RewardGains};
use super::PpoConfig;
use crate::dynamics::{world_step, NoiseSource, WorldParams, WorldState};
use crate::error::Result;
use crate::geometry::{ObstacleField, ObstacleShape, Regions};
use crate::nn::{PolicyMeta, OBS_DIM};
use crate::rng::{self, tag, Stream};
use crate::sim::{sample_initial_conditions, Scenario};
use crate::Vec2;

/// One herder, one target and one obstacle, with the target started behind
/// the obstacle with probability `p_obstacle`.
pub fn reset_episode<R: Rng + ?Sized>(
    config: &PpoConfig,
    regions: &Regions,
    shape: &ObstacleShape,
    world: &WorldParams,
    rng: &mut R,
) -> Result<(WorldState, ObstacleField, bool)> {
    let scenario = Scenario {
        p_obstacle: config.p_obstacle,
        ..Scenario::single()
    };
    let init = sample_initial_conditions(&scenario, regions, shape, world, rng)?;
    Ok((init.state, init.field, init.cone_start))
}

/// Fixed settings of the training environments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvSettings {
    pub regions: Regions,
    pub shape: ObstacleShape,
    pub world: WorldParams,
    pub gains: RewardGains,
    pub config: PpoConfig,
    pub meta: PolicyMeta,
}

/// Result of one environment step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    /// The target reached the goal.
    pub success: bool,
    /// The episode hit the step cap without success.
    pub truncated: bool,
}

impl StepOutcome {
    pub fn done(&self) -> bool {
        self.success || self.truncated
    }
}

/// Training environment. Episode `k` of environment `e` is seeded from
/// `(master_seed, e, k)` only, so runs do not depend on scheduling.
#[derive(Debug, Clone)]
pub struct DrivingEnv {
    pub env_id: u64,
    pub master_seed: u64,
    pub episode_counter: u64,
    pub state: WorldState,
    pub field: ObstacleField,
    pub cone_start: bool,
    pub steps: usize,
    pub cumulative_reward: f64,
    noise: NoiseSource,
    action_rng: Stream,
}

impl DrivingEnv {
    pub fn new(env_id: u64, master_seed: u64, settings: &EnvSettings) -> Result<Self> {
        let mut env = Self {
            env_id,
            master_seed,
            episode_counter: 0,
            state: WorldState::default(),
            field: ObstacleField::default(),
            cone_start: false,
            steps: 0,
            cumulative_reward: 0.0,
            noise: NoiseSource::new(0),
            action_rng: rng::seeded(0),
        };
        env.start_episode(settings)?;
        Ok(env)
    }

    fn start_episode(&mut self, settings: &EnvSettings) -> Result<()> {
        let seed = rng::derive_seed(self.master_seed, &[tag::ENV, self.env_id, self.episode_counter]);
        let mut init_rng = rng::substream(seed, &[tag::INIT]);
        let (state, field, cone) =
            reset_episode(&settings.config, &settings.regions, &settings.shape, &settings.world, &mut init_rng)?;
        self.state = state;
        self.field = field;
        self.cone_start = cone;
        self.noise = NoiseSource::new(seed);
        self.action_rng = rng::substream(seed, &[tag::POLICY]);
        self.steps = 0;
        self.cumulative_reward = 0.0;
        Ok(())
    }

    /// Moves on to the next episode of this environment.
    pub fn reset(&mut self, settings: &EnvSettings) -> Result<()> {
        self.episode_counter += 1;
        self.start_episode(settings)
    }

    /// Stream for exploration noise in the current episode.
    pub fn action_rng(&mut self) -> &mut Stream {
        &mut self.action_rng
    }

    /// Normalized `[H, T, P]`.
    pub fn observation(&self, meta: &PolicyMeta) -> [f64; OBS_DIM] {
        let p = self.field.obstacles.first().map_or(meta.sentinel, |o| o.center);
        let (h, t) = (self.state.herders[0], self.state.targets[0]);
        [h.x, h.y, t.x, t.y, p.x, p.y].map(|v| v / meta.obs_scale)
    }

    /// Applies a velocity command (already clamped to the speed box).
    pub fn step(&mut self, command: Vec2, settings: &EnvSettings) -> Result<StepOutcome> {
        self.state = world_step(&self.state, &[command], &self.field, &settings.world, &self.noise)?;
        self.steps += 1;
        let (h, t) = (self.state.herders[0], self.state.targets[0]);
        let reward = driving_reward(t, h, command, &settings.regions, &settings.gains);
        self.cumulative_reward += reward;
        let success = settings.regions.in_goal(t);
        let truncated = !success && self.steps >= settings.config.episode_cap;
        Ok(StepOutcome { reward, success, truncated })
    }
}
