//! Target selection and driving laws against brute-force oracles.

use proptest::prelude::*;
use rand::Rng;
use shepherd_core::control::{
    assign_all, build_observation, fallback_control, hierarchical_controls, select_target, vortex_control, Driver,
    VortexParams,
};
use shepherd_core::dynamics::{NoiseSource, WorldParams, WorldState};
use shepherd_core::geometry::{sample_obstacle_field, ObstacleField, ObstacleShape, Regions};
use shepherd_core::rng::seeded;
use shepherd_core::Vec2;

fn random_state(rng: &mut impl Rng, herders: usize, targets: usize) -> WorldState {
    let mut p = || Vec2::new(rng.random_range(-25.0..25.0), rng.random_range(-25.0..25.0));
    let h = (0..herders).map(|_| p()).collect();
    let t = (0..targets).map(|_| p()).collect();
    WorldState::new(h, t).unwrap()
}

/// Admissible set of herder `j` written straight from its definition.
fn admissible(j: usize, s: &WorldState, regions: &Regions) -> Vec<usize> {
    (0..s.targets.len())
        .filter(|&i| s.targets[i].norm() > regions.goal_radius)
        .filter(|&i| {
            let dj = (s.targets[i] - s.herders[j]).norm();
            (0..s.herders.len()).filter(|&a| a != j).all(|a| dj < (s.targets[i] - s.herders[a]).norm())
        })
        .collect()
}

#[test]
fn selection_matches_brute_force_and_partitions_targets() {
    let regions = Regions::default();
    let mut rng = seeded(17);
    for _ in 0..200 {
        let n = rng.random_range(1..8);
        let m = rng.random_range(1..40);
        let s = random_state(&mut rng, n, m);
        let mut owner = vec![None; m];
        for j in 0..n {
            let adm = admissible(j, &s, &regions);
            let oracle = adm
                .iter()
                .copied()
                .reduce(|best, i| if s.targets[i].norm() > s.targets[best].norm() { i } else { best });
            assert_eq!(select_target(j, &s, &regions).selected_target, oracle);
            for i in adm {
                assert!(owner[i].is_none(), "target {i} admissible to two herders");
                owner[i] = Some(j);
            }
        }
        let picks: Vec<_> = assign_all(&s, &regions).iter().filter_map(|a| a.selected_target).collect();
        let mut unique = picks.clone();
        unique.sort_unstable();
        unique.dedup();
        assert_eq!(unique.len(), picks.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn selection_is_rotation_and_relabeling_equivariant(seed in any::<u64>(), angle in 0.0..6.28f64) {
        let regions = Regions::default();
        let mut rng = seeded(seed);
        let s = random_state(&mut rng, 4, 12);
        let rot = |p: &Vec2| Vec2::from_polar(p.norm(), p.angle() + angle);
        let rotated = WorldState::new(s.herders.iter().map(rot).collect(), s.targets.iter().map(rot).collect()).unwrap();
        let mut herders = s.herders.clone();
        herders.reverse();
        let relabeled = WorldState::new(herders, s.targets.clone()).unwrap();
        for j in 0..4 {
            let a = select_target(j, &s, &regions).selected_target;
            prop_assert_eq!(a, select_target(j, &rotated, &regions).selected_target);
            prop_assert_eq!(a, select_target(3 - j, &relabeled, &regions).selected_target);
        }
    }

    #[test]
    fn fallback_heads_for_the_goal_circle(x in -30.0..30.0f64, y in -30.0..30.0f64) {
        let regions = Regions::default();
        let params = WorldParams::default();
        let h = Vec2::new(x, y);
        let u = fallback_control(h, &regions, &params);
        prop_assert!(u.norm_inf() <= params.v_herder + 1e-12);
        let before = (h.norm() - regions.goal_radius).abs();
        let after = ((h + u * params.dt).norm() - regions.goal_radius).abs();
        prop_assert!(after <= before + 1e-12);
    }

    #[test]
    fn vortex_command_respects_speed_box(seed in any::<u64>()) {
        let regions = Regions::default();
        let params = WorldParams::default();
        let mut rng = seeded(seed);
        let field = sample_obstacle_field(3, &regions, &ObstacleShape::default(), 3.0, &mut rng).unwrap();
        let s = random_state(&mut rng, 3, 8);
        let noise = NoiseSource::new(seed);
        let controls = hierarchical_controls(&s, &field, &regions, &params, &Driver::Vortex(VortexParams::default()), &noise).unwrap();
        for u in controls {
            prop_assert!(u.is_finite() && u.norm_inf() <= params.v_herder + 1e-12);
        }
    }
}

#[test]
fn observation_reports_nearest_obstacle_or_sentinel() {
    let regions = Regions::default();
    let mut rng = seeded(19);
    let sentinel = Vec2::new(50.0, 50.0);
    for _ in 0..200 {
        let field = sample_obstacle_field(3, &regions, &ObstacleShape::default(), 3.0, &mut rng).unwrap();
        let s = random_state(&mut rng, 2, 3);
        let noise = NoiseSource::new(rng.random());
        let obs = build_observation(0, 1, &s, &field, sentinel, &noise);
        let nearest = field
            .obstacles
            .iter()
            .min_by(|a, b| a.signed_distance(s.herders[0]).total_cmp(&b.signed_distance(s.herders[0])))
            .unwrap();
        assert_eq!(obs.obstacle_center, nearest.center);
        assert_eq!((obs.herder, obs.target), (s.herders[0], s.targets[1]));
        let none = build_observation(0, 1, &s, &ObstacleField::empty(3.0), sentinel, &noise);
        assert_eq!(none.obstacle_center, sentinel);
    }
}

#[test]
fn vortex_approaches_from_behind_in_open_space() {
    let params = WorldParams::default();
    let obs = shepherd_core::control::DrivingObservation {
        herder: Vec2::new(20.0, 0.0),
        target: Vec2::new(10.0, 0.0),
        obstacle_center: Vec2::new(50.0, 50.0),
    };
    // The herder sits behind the steering point and moves toward the goal.
    let u = vortex_control(&obs, &ObstacleField::empty(3.0), &params, &VortexParams::default());
    assert!(u.x < 0.0 && u.y.abs() < 1e-12);
}
