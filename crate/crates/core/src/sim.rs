//! Episode construction and closed-loop simulation of the hierarchical
//! controller.

use alloc::vec::Vec;

use rand::Rng;

use crate::control::{hierarchical_controls, Driver};
use crate::dynamics::{world_step, NoiseSource, WorldParams, WorldState};
use crate::error::{Error, Result};
use crate::geometry::{
    sample_cone_point, sample_free_point_where, sample_obstacle_field, ObstacleField, ObstacleShape,
    Regions,
};
use crate::metrics::{chi, gathering_time, EpisodeRecord};
use crate::rng::{self, tag, Stream};
use crate::Vec2;

/// Agent and obstacle counts plus the behind-obstacle initialization rule.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct Scenario {
    pub herders: usize,
    pub targets: usize,
    pub obstacles: usize,
    /// Probability that an episode places targets behind obstacles.
    pub p_obstacle: f64,
    /// In such an episode, the fraction of targets (rounded up) placed in the
    /// sector behind a uniformly chosen obstacle.
    pub cone_fraction: f64,
}

impl Scenario {
    /// One herder, one target, one obstacle.
    pub const fn single() -> Self {
        Self {
            herders: 1,
            targets: 1,
            obstacles: 1,
            p_obstacle: 0.5,
            cone_fraction: 1.0,
        }
    }

    /// Ten herders, one hundred targets, three obstacles.
    pub const fn multi() -> Self {
        Self {
            herders: 10,
            targets: 100,
            obstacles: 3,
            p_obstacle: 0.5,
            cone_fraction: 0.25,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.herders == 0 || self.targets == 0 {
            return Err(Error::Config("scenario needs at least one herder and one target".into()));
        }
        if !(0.0..=1.0).contains(&self.p_obstacle) {
            return Err(Error::Config("p_obstacle must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.cone_fraction) {
            return Err(Error::Config("cone_fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Everything that is fixed across the episodes of a campaign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSpec {
    pub scenario: Scenario,
    pub regions: Regions,
    pub shape: ObstacleShape,
    pub world: WorldParams,
    pub chi_star: f64,
    pub cap_steps: usize,
}

/// Initial conditions of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeInit {
    pub field: ObstacleField,
    pub state: WorldState,
    /// Whether some targets were placed behind obstacles.
    pub cone_start: bool,
}

/// Seed of episode `index` under `master_seed`.
pub fn episode_seed(master_seed: u64, index: u64) -> u64 {
    rng::derive_seed(master_seed, &[tag::EPISODE, index])
}

fn outside_all_cones(p: Vec2, regions: &Regions, field: &ObstacleField) -> bool {
    field.obstacles.iter().all(|o| !regions.in_cone(p, o))
}

/// Samples obstacles and agent positions. Agents start uniformly in the free
/// initialization disc outside every obstacle's rear sector, except that with
/// probability `p_obstacle` a share of the targets starts inside such a sector.
pub fn sample_initial_conditions<R: Rng + ?Sized>(
    scenario: &Scenario,
    regions: &Regions,
    shape: &ObstacleShape,
    world: &WorldParams,
    rng: &mut R,
) -> Result<EpisodeInit> {
    scenario.validate()?;
    const FIELD_ATTEMPTS: usize = 100;
    let cone_start = scenario.obstacles > 0 && rng.random::<f64>() < scenario.p_obstacle;
    let in_cone = if cone_start {
        libm::ceil(scenario.cone_fraction * scenario.targets as f64) as usize
    } else {
        0
    };
    let mut last_err = None;
    for _ in 0..FIELD_ATTEMPTS {
        let field = sample_obstacle_field(scenario.obstacles, regions, shape, world.d_obstacle, rng)?;
        match place_agents(scenario, regions, &field, in_cone, rng) {
            Ok((herders, targets)) => {
                return Ok(EpisodeInit {
                    state: WorldState::new(herders, targets)?,
                    field,
                    cone_start,
                })
            }
            // A sector hugging the rim can be empty; draw a new layout.
            Err(e @ Error::Infeasible { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or(Error::Infeasible { what: "episode layout", attempts: FIELD_ATTEMPTS }))
}

type Placement = (Vec<Vec2>, Vec<Vec2>);

fn place_agents<R: Rng + ?Sized>(
    scenario: &Scenario,
    regions: &Regions,
    field: &ObstacleField,
    in_cone: usize,
    rng: &mut R,
) -> Result<Placement> {
    let mut targets = Vec::with_capacity(scenario.targets);
    for i in 0..scenario.targets {
        let p = if i < in_cone {
            let k = rng.random_range(0..field.obstacles.len());
            sample_cone_point(&field.obstacles[k], regions, field, rng)?
        } else {
            sample_free_point_where(regions, field, rng, "free point outside rear sectors", |p| {
                outside_all_cones(p, regions, field)
            })?
        };
        targets.push(p);
    }
    let herders = (0..scenario.herders)
        .map(|_| {
            sample_free_point_where(regions, field, rng, "free point outside rear sectors", |p| {
                outside_all_cones(p, regions, field)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((herders, targets))
}

/// Radial statistics of one recorded state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiiSample {
    pub target_mean: f64,
    pub target_std: f64,
    pub target_max: f64,
    pub herder_mean: f64,
    pub herder_std: f64,
}

impl RadiiSample {
    pub fn of(state: &WorldState) -> Self {
        let stats = |pts: &[Vec2]| {
            let r: Vec<f64> = pts.iter().map(|p| p.norm()).collect();
            let n = r.len() as f64;
            let mean = r.iter().sum::<f64>() / n;
            let var = r.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            (mean, libm::sqrt(var), r.iter().copied().fold(0.0, f64::max))
        };
        let (tm, ts, tx) = stats(&state.targets);
        let (hm, hs, _) = stats(&state.herders);
        Self {
            target_mean: tm,
            target_std: ts,
            target_max: tx,
            herder_mean: hm,
            herder_std: hs,
        }
    }
}

/// Recorded positions of one state.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub herders: Vec<Vec2>,
    pub targets: Vec<Vec2>,
}

/// Everything produced by one closed-loop episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub seed: u64,
    pub init: EpisodeInit,
    pub record: EpisodeRecord,
    pub radii: Vec<RadiiSample>,
    /// Only filled when requested.
    pub frames: Vec<Frame>,
    pub final_state: WorldState,
}

/// Initial conditions derived from an episode seed alone, so that different
/// drivers see identical starts and noise.
pub fn episode_init(spec: &EpisodeSpec, seed: u64) -> Result<EpisodeInit> {
    let mut init_rng: Stream = rng::substream(seed, &[tag::INIT]);
    sample_initial_conditions(&spec.scenario, &spec.regions, &spec.shape, &spec.world, &mut init_rng)
}

/// Simulates until `chi >= chi_star` or `cap_steps` ticks have elapsed.
pub fn run_episode(
    spec: &EpisodeSpec,
    driver: &Driver<'_>,
    seed: u64,
    keep_frames: bool,
) -> Result<EpisodeOutcome> {
    let init = episode_init(spec, seed)?;
    let noise = NoiseSource::new(seed);
    let field = &init.field;
    let mut state = init.state.clone();
    let mut record = EpisodeRecord::default();
    let mut radii = Vec::new();
    let mut frames = Vec::new();
    let mut observe = |s: &WorldState, record: &mut EpisodeRecord| {
        let c = chi(&s.targets, &spec.regions);
        record.chi_series.push(c);
        radii.push(RadiiSample::of(s));
        if keep_frames {
            frames.push(Frame { herders: s.herders.clone(), targets: s.targets.clone() });
        }
        c
    };
    let mut c = observe(&state, &mut record);
    let mut ticks = 0;
    while c < spec.chi_star && ticks < spec.cap_steps {
        let controls = hierarchical_controls(&state, field, &spec.regions, &spec.world, driver, &noise)?;
        let next = world_step(&state, &controls, field, &spec.world, &noise)?;
        if !next.herders.iter().chain(&next.targets).all(|p| p.is_finite()) {
            return Err(Error::Numeric("non-finite position during episode".into()));
        }
        record
            .herder_displacements
            .push(next.herders.iter().zip(&state.herders).map(|(a, b)| a.distance(*b)).collect());
        state = next;
        c = observe(&state, &mut record);
        ticks += 1;
    }
    record.steps = record.chi_series.len();
    record.gathering_step = gathering_time(&record.chi_series, spec.chi_star);
    record.succeeded = record.gathering_step.is_some();
    Ok(EpisodeOutcome {
        seed,
        init,
        record,
        radii,
        frames,
        final_state: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::VortexParams;

    fn spec(scenario: Scenario) -> EpisodeSpec {
        EpisodeSpec {
            scenario,
            regions: Regions::default(),
            shape: ObstacleShape::default(),
            world: WorldParams::default(),
            chi_star: 1.0,
            cap_steps: 200,
        }
    }

    #[test]
    fn initial_conditions_are_reproducible_and_free() {
        let s = spec(Scenario::multi());
        for seed in 0..20 {
            let a = episode_init(&s, seed).unwrap();
            let b = episode_init(&s, seed).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.field.len(), 3);
            assert!(a.field.spacing_holds());
            for p in a.state.herders.iter().chain(&a.state.targets) {
                assert!(a.field.is_free(*p) && p.norm() <= 25.0);
            }
        }
    }

    #[test]
    fn episode_record_shapes() {
        let s = spec(Scenario::single());
        let out = run_episode(&s, &Driver::Vortex(VortexParams::default()), 7, true).unwrap();
        let r = &out.record;
        assert_eq!(r.chi_series.len(), r.steps);
        assert_eq!(r.herder_displacements.len(), r.steps - 1);
        assert_eq!(out.frames.len(), r.steps);
        assert!(r.steps <= s.cap_steps + 1);
        let again = run_episode(&s, &Driver::Vortex(VortexParams::default()), 7, true).unwrap();
        assert_eq!(out, again);
    }
}
