//! Planar arena geometry: the goal disc, the initialization disc, rounded
//! rectangular obstacles and the random placement rules used to build
//! episodes.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::Vec2;

/// Rejection samplers give up after this many consecutive failures.
pub const MAX_REJECTIONS: usize = 10_000;

/// Tolerance for the unit-norm and orthogonality checks on obstacles.
const ORIENTATION_TOL: f64 = 1e-9;

/// Goal disc, initialization disc and the curriculum cone half-angle.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct Regions {
    /// Radius of the goal disc centered at the origin.
    pub goal_radius: f64,
    /// Radius of the disc that contains all initial positions and obstacle centers.
    pub init_radius: f64,
    /// Half-angle (radians) of the sector behind an obstacle used for
    /// curriculum initialization.
    pub cone_half_angle: f64,
}

impl Default for Regions {
    fn default() -> Self {
        Self {
            goal_radius: 5.0,
            init_radius: 25.0,
            cone_half_angle: 0.35,
        }
    }
}

impl Regions {
    pub fn validate(&self) -> Result<()> {
        if !(self.goal_radius > 0.0 && self.goal_radius.is_finite()) {
            return Err(Error::Config("goal_radius must be > 0".into()));
        }
        if !(self.init_radius > self.goal_radius && self.init_radius.is_finite()) {
            return Err(Error::Config(
                "init_radius must be > goal_radius (0 < rho_G < R)".into(),
            ));
        }
        if !(self.cone_half_angle > 0.0 && self.cone_half_angle < PI / 2.0) {
            return Err(Error::Config(
                "cone_half_angle must lie in (0, pi/2)".into(),
            ));
        }
        Ok(())
    }

    /// Closed goal disc membership.
    #[inline]
    pub fn in_goal(&self, q: Vec2) -> bool {
        q.norm() <= self.goal_radius
    }

    #[inline]
    pub fn in_init_disc(&self, q: Vec2) -> bool {
        q.norm() <= self.init_radius
    }

    /// Membership in the curriculum sector behind `obstacle` (as seen from
    /// the goal): farther from the origin than the obstacle center, within
    /// `cone_half_angle` of its bearing, and inside the initialization disc.
    /// Obstacle interiors are not excluded here.
    pub fn in_cone(&self, q: Vec2, obstacle: &Obstacle) -> bool {
        let r = q.norm();
        r > obstacle.center.norm()
            && r <= self.init_radius
            && q.angle_between(obstacle.center) <= self.cone_half_angle
    }
}

/// Closed goal disc membership.
#[inline]
pub fn in_goal(q: Vec2, regions: &Regions) -> bool {
    regions.in_goal(q)
}

/// Side lengths and corner rounding shared by all obstacles of a scene.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ObstacleShape {
    /// Long side `L`.
    pub length: f64,
    /// Short side `S`.
    pub width: f64,
    pub corner_radius: f64,
}

impl Default for ObstacleShape {
    fn default() -> Self {
        Self {
            length: 10.0,
            width: 1.0,
            corner_radius: 0.1,
        }
    }
}

impl ObstacleShape {
    pub fn validate(&self) -> Result<()> {
        let (hl, hs, r) = (self.length / 2.0, self.width / 2.0, self.corner_radius);
        if !(hl > hs && hs > r && r >= 0.0 && hl.is_finite()) {
            return Err(Error::Config(
                "obstacle shape must satisfy length > width > 2 * corner_radius >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Minimum center spacing between two obstacles: the diagonal of the
    /// bounding box inflated by `margin` on every side.
    pub fn min_center_spacing(&self, margin: f64) -> f64 {
        libm::hypot(self.width + 2.0 * margin, self.length + 2.0 * margin)
    }
}

/// A rectangle with rounded corners.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Obstacle {
    pub center: Vec2,
    pub half_long: f64,
    pub half_short: f64,
    /// Unit direction of the long axis.
    pub orientation: Vec2,
    pub corner_radius: f64,
}

impl Obstacle {
    /// Obstacle centered at `center` whose long side is orthogonal to the
    /// ray from the origin through `center`.
    pub fn facing_goal(center: Vec2, shape: &ObstacleShape) -> Result<Self> {
        shape.validate()?;
        let radial = center.try_normalize().ok_or_else(|| {
            Error::Config("obstacle center must differ from the goal center".into())
        })?;
        Ok(Self {
            center,
            half_long: shape.length / 2.0,
            half_short: shape.width / 2.0,
            orientation: radial.perp(),
            corner_radius: shape.corner_radius,
        })
    }

    /// Checks the structural invariants, including orthogonality of the long
    /// axis to the goal ray.
    pub fn validate(&self) -> Result<()> {
        if libm::fabs(self.orientation.norm() - 1.0) > ORIENTATION_TOL {
            return Err(Error::Config("obstacle orientation must be unit-norm".into()));
        }
        if let Some(radial) = self.center.try_normalize() {
            if libm::fabs(self.orientation.dot(radial)) > ORIENTATION_TOL {
                return Err(Error::Config(
                    "obstacle long axis must be orthogonal to the goal ray".into(),
                ));
            }
        }
        if !(self.half_long > self.half_short
            && self.half_short > self.corner_radius
            && self.corner_radius >= 0.0)
        {
            return Err(Error::Config(
                "obstacle must satisfy half_long > half_short > corner_radius >= 0".into(),
            ));
        }
        Ok(())
    }

    #[inline]
    fn to_local(&self, q: Vec2) -> (f64, f64) {
        let d = q - self.center;
        (d.dot(self.orientation), d.dot(self.orientation.perp()))
    }

    #[inline]
    fn to_world_dir(&self, u: f64, v: f64) -> Vec2 {
        self.orientation * u + self.orientation.perp() * v
    }

    /// Signed distance to the rounded boundary: positive outside, negative
    /// inside, zero on the boundary.
    pub fn signed_distance(&self, q: Vec2) -> f64 {
        let (u, v) = self.to_local(q);
        let r = self.corner_radius;
        let qx = libm::fabs(u) - (self.half_long - r);
        let qy = libm::fabs(v) - (self.half_short - r);
        let outside = libm::hypot(qx.max(0.0), qy.max(0.0));
        let inside = qx.max(qy).min(0.0);
        outside + inside - r
    }

    /// Unit gradient of [`Obstacle::signed_distance`]. Outside the obstacle it
    /// points from the nearest boundary point toward `q`. On the medial axis
    /// the tie goes to the long faces, then to the positive side.
    pub fn outward_normal(&self, q: Vec2) -> Vec2 {
        let (u, v) = self.to_local(q);
        let r = self.corner_radius;
        let su = if u < 0.0 { -1.0 } else { 1.0 };
        let sv = if v < 0.0 { -1.0 } else { 1.0 };
        let qx = libm::fabs(u) - (self.half_long - r);
        let qy = libm::fabs(v) - (self.half_short - r);
        if qx > 0.0 || qy > 0.0 {
            let gx = qx.max(0.0);
            let gy = qy.max(0.0);
            let n = libm::hypot(gx, gy);
            self.to_world_dir(su * gx / n, sv * gy / n)
        } else if qx > qy {
            self.to_world_dir(su, 0.0)
        } else {
            self.to_world_dir(0.0, sv)
        }
    }

    /// Point on the rounded boundary at parameter `t` in `[0, 1)`, traversed
    /// at uniform arc length. Used for plotting and by test oracles.
    pub fn boundary_point(&self, t: f64) -> Vec2 {
        let r = self.corner_radius;
        let a = self.half_long - r;
        let b = self.half_short - r;
        let arc = PI / 2.0 * r;
        let perimeter = 4.0 * (a + b) + 4.0 * arc;
        let mut s = t.rem_euclid(1.0) * perimeter;
        // Counter-clockwise from (a + r, -b): right edge, top-right arc, top
        // edge, top-left arc, left edge, bottom-left arc, bottom edge,
        // bottom-right arc.
        let segments: [(f64, u8); 8] = [
            (2.0 * b, 0),
            (arc, 1),
            (2.0 * a, 2),
            (arc, 3),
            (2.0 * b, 4),
            (arc, 5),
            (2.0 * a, 6),
            (arc, 7),
        ];
        let (mut u, mut v) = (a + r, -b);
        for (len, kind) in segments {
            if s <= len || kind == 7 {
                let f = if len > 0.0 { (s / len).min(1.0) } else { 0.0 };
                let (cu, cv, start) = match kind {
                    1 => (a, b, 0.0),
                    3 => (-a, b, PI / 2.0),
                    5 => (-a, -b, PI),
                    7 => (a, -b, 1.5 * PI),
                    _ => (0.0, 0.0, 0.0),
                };
                match kind {
                    0 => (u, v) = (a + r, -b + f * 2.0 * b),
                    2 => (u, v) = (a - f * 2.0 * a, b + r),
                    4 => (u, v) = (-a - r, b - f * 2.0 * b),
                    6 => (u, v) = (-a + f * 2.0 * a, -b - r),
                    _ => {
                        let th = start + f * PI / 2.0;
                        (u, v) = (cu + r * libm::cos(th), cv + r * libm::sin(th));
                    }
                }
                break;
            }
            s -= len;
        }
        self.center + self.to_world_dir(u, v)
    }
}

/// Signed distance from `q` to the rounded boundary of `obstacle`.
#[inline]
pub fn signed_distance(q: Vec2, obstacle: &Obstacle) -> f64 {
    obstacle.signed_distance(q)
}

/// Unit outward normal (gradient of the signed distance) at `q`.
#[inline]
pub fn outward_normal(q: Vec2, obstacle: &Obstacle) -> Vec2 {
    obstacle.outward_normal(q)
}

/// The static obstacles of a scene and the safety margin used to space them.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ObstacleField {
    pub obstacles: Vec<Obstacle>,
    pub safety_margin: f64,
}

impl ObstacleField {
    pub fn empty(safety_margin: f64) -> Self {
        Self {
            obstacles: Vec::new(),
            safety_margin,
        }
    }

    pub fn len(&self) -> usize {
        self.obstacles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obstacles.is_empty()
    }

    /// Smallest signed distance over all obstacles (`+inf` when empty).
    pub fn min_signed_distance(&self, q: Vec2) -> f64 {
        self.obstacles
            .iter()
            .map(|o| o.signed_distance(q))
            .fold(f64::INFINITY, f64::min)
    }

    /// Strictly outside every obstacle.
    pub fn is_free(&self, q: Vec2) -> bool {
        self.obstacles.iter().all(|o| o.signed_distance(q) > 0.0)
    }

    /// Whether every pair of obstacles obeys the minimum center spacing
    /// `sqrt((S + 2m)^2 + (L + 2m)^2)`.
    pub fn spacing_holds(&self) -> bool {
        let obs = &self.obstacles;
        (0..obs.len()).all(|i| {
            (i + 1..obs.len()).all(|j| {
                obs[i].center.distance(obs[j].center)
                    > spacing_of(&obs[i], &obs[j], self.safety_margin)
            })
        })
    }
}

fn spacing_of(a: &Obstacle, b: &Obstacle, margin: f64) -> f64 {
    let length = 2.0 * a.half_long.max(b.half_long);
    let width = 2.0 * a.half_short.max(b.half_short);
    libm::hypot(width + 2.0 * margin, length + 2.0 * margin)
}

/// Uniform point in the closed disc of radius `radius`.
pub fn sample_disc<R: Rng + ?Sized>(radius: f64, rng: &mut R) -> Vec2 {
    let r = radius * libm::sqrt(rng.random::<f64>());
    let theta = 2.0 * PI * rng.random::<f64>();
    Vec2::from_polar(r, theta)
}

/// Places `count` obstacles with centers uniform in the initialization disc.
/// A candidate is rejected when it violates the pairwise spacing rule or
/// when its rounded rectangle comes within `safety_margin` of the goal disc.
pub fn sample_obstacle_field<R: Rng + ?Sized>(
    count: usize,
    regions: &Regions,
    shape: &ObstacleShape,
    safety_margin: f64,
    rng: &mut R,
) -> Result<ObstacleField> {
    shape.validate()?;
    let spacing = shape.min_center_spacing(safety_margin);
    let keepout = regions.goal_radius + safety_margin;
    let mut field = ObstacleField {
        obstacles: Vec::with_capacity(count),
        safety_margin,
    };
    while field.obstacles.len() < count {
        let mut placed = false;
        for _ in 0..MAX_REJECTIONS {
            let center = sample_disc(regions.init_radius, rng);
            let Ok(candidate) = Obstacle::facing_goal(center, shape) else {
                continue;
            };
            if candidate.signed_distance(Vec2::ZERO) <= keepout {
                continue;
            }
            if field
                .obstacles
                .iter()
                .any(|o| o.center.distance(center) <= spacing)
            {
                continue;
            }
            field.obstacles.push(candidate);
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::Infeasible {
                what: "obstacle placement",
                attempts: MAX_REJECTIONS,
            });
        }
    }
    Ok(field)
}

/// Rejection sampler over the free part of the initialization disc,
/// restricted further by `accept`.
pub fn sample_free_point_where<R, F>(
    regions: &Regions,
    field: &ObstacleField,
    rng: &mut R,
    what: &'static str,
    mut accept: F,
) -> Result<Vec2>
where
    R: Rng + ?Sized,
    F: FnMut(Vec2) -> bool,
{
    for _ in 0..MAX_REJECTIONS {
        let p = sample_disc(regions.init_radius, rng);
        if field.is_free(p) && accept(p) {
            return Ok(p);
        }
    }
    Err(Error::Infeasible {
        what,
        attempts: MAX_REJECTIONS,
    })
}

/// Uniform point of the initialization disc outside every obstacle.
pub fn sample_free_point<R: Rng + ?Sized>(
    regions: &Regions,
    field: &ObstacleField,
    rng: &mut R,
) -> Result<Vec2> {
    sample_free_point_where(regions, field, rng, "free point", |_| true)
}

/// Uniform point of the sector behind `obstacle` (see [`Regions::in_cone`])
/// that lies outside every obstacle of `field`.
pub fn sample_cone_point<R: Rng + ?Sized>(
    obstacle: &Obstacle,
    regions: &Regions,
    field: &ObstacleField,
    rng: &mut R,
) -> Result<Vec2> {
    let inner = obstacle.center.norm();
    let outer = regions.init_radius;
    if inner >= outer {
        return Err(Error::Infeasible {
            what: "cone point",
            attempts: 0,
        });
    }
    let bearing = obstacle.center.angle();
    let alpha = regions.cone_half_angle;
    for _ in 0..MAX_REJECTIONS {
        // Area-uniform radius on the annular sector.
        let u: f64 = rng.random();
        let r = libm::sqrt(inner * inner + u * (outer * outer - inner * inner));
        let theta = bearing + alpha * (2.0 * rng.random::<f64>() - 1.0);
        let p = Vec2::from_polar(r, theta);
        if regions.in_cone(p, obstacle) && field.is_free(p) {
            return Ok(p);
        }
    }
    Err(Error::Infeasible {
        what: "cone point",
        attempts: MAX_REJECTIONS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn bar() -> Obstacle {
        Obstacle::facing_goal(Vec2::new(12.0, 0.0), &ObstacleShape::default()).unwrap()
    }

    #[test]
    fn perpendicular_offset_from_side_midpoint() {
        let shape = ObstacleShape {
            corner_radius: 0.0,
            ..ObstacleShape::default()
        };
        let o = Obstacle::facing_goal(Vec2::new(12.0, 0.0), &shape).unwrap();
        // Long axis runs along y here; the short half-extent is along x.
        let q = o.center + o.orientation.perp() * (o.half_short + 1.0);
        assert!((o.signed_distance(q) - 1.0).abs() < 1e-12);
        let on_side = o.center + o.orientation.perp() * o.half_short;
        assert_eq!(o.signed_distance(on_side), 0.0);
    }

    #[test]
    fn interior_is_negative() {
        let o = bar();
        assert!(o.signed_distance(o.center) < 0.0);
        assert!((o.signed_distance(o.center) + o.half_short).abs() < 1e-12);
    }

    #[test]
    fn normal_beyond_corner_points_from_arc_center() {
        let o = bar();
        let r = o.corner_radius;
        let arc_center =
            o.center + o.orientation * (o.half_long - r) + o.orientation.perp() * (o.half_short - r);
        let dir = (o.orientation + o.orientation.perp() * 0.3).try_normalize().unwrap();
        let q = arc_center + dir * 2.0;
        let n = o.outward_normal(q);
        assert!((n - dir).norm() < 1e-12);
        assert!((o.signed_distance(q) - (2.0 - r)).abs() < 1e-12);
    }

    #[test]
    fn normal_on_long_side_perpendicular() {
        let o = bar();
        let q = o.center + o.orientation * 1.3 - o.orientation.perp() * 2.0;
        assert!((o.outward_normal(q) + o.orientation.perp()).norm() < 1e-12);
    }

    #[test]
    fn boundary_points_have_zero_distance() {
        let o = bar();
        for i in 0..1000 {
            let p = o.boundary_point(i as f64 / 1000.0);
            assert!(o.signed_distance(p).abs() < 1e-12, "t={i} sd={}", o.signed_distance(p));
        }
    }

    #[test]
    fn goal_membership_is_closed() {
        let g = Regions::default();
        assert!(in_goal(Vec2::ZERO, &g));
        assert!(in_goal(Vec2::new(5.0, 0.0), &g));
        assert!(!in_goal(Vec2::new(5.0 + 1e-9, 0.0), &g));
    }

    #[test]
    fn zero_obstacles_is_empty_field() {
        let f = sample_obstacle_field(0, &Regions::default(), &ObstacleShape::default(), 3.0, &mut seeded(1))
            .unwrap();
        assert!(f.is_empty());
    }

    #[test]
    fn impossible_field_reports_infeasible() {
        let err = sample_obstacle_field(40, &Regions::default(), &ObstacleShape::default(), 3.0, &mut seeded(1))
            .unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }));
    }

    #[test]
    fn sampled_obstacles_face_the_goal() {
        let mut rng = seeded(3);
        for _ in 0..200 {
            let f = sample_obstacle_field(3, &Regions::default(), &ObstacleShape::default(), 3.0, &mut rng)
                .unwrap();
            for o in &f.obstacles {
                o.validate().unwrap();
                assert!(o.orientation.dot(o.center.try_normalize().unwrap()).abs() <= 1e-9);
                assert!(o.signed_distance(Vec2::ZERO) > 5.0 + 3.0);
            }
        }
    }

    #[test]
    fn cone_points_satisfy_predicate() {
        let regions = Regions::default();
        let mut rng = seeded(11);
        let o = bar();
        let field = ObstacleField {
            obstacles: alloc::vec![o],
            safety_margin: 3.0,
        };
        for _ in 0..1000 {
            let p = sample_cone_point(&o, &regions, &field, &mut rng).unwrap();
            assert!(regions.in_cone(p, &o));
            assert!(p.angle_between(o.center) <= regions.cone_half_angle);
            assert!(p.norm() <= regions.init_radius);
            assert!(field.is_free(p));
            // Obstacle on +x: every cone point lies beyond |P| cos(alpha).
            assert!(p.x > o.center.norm() * libm::cos(regions.cone_half_angle));
        }
    }

    #[test]
    fn cone_behind_rim_obstacle_is_infeasible() {
        let regions = Regions::default();
        let o = Obstacle::facing_goal(Vec2::new(26.0, 0.0), &ObstacleShape::default()).unwrap();
        let field = ObstacleField::empty(3.0);
        assert!(sample_cone_point(&o, &regions, &field, &mut seeded(0)).is_err());
    }
}
