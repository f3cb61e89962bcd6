use crate::error::{Error, Result};
use crate::geometry::Regions;
use crate::Vec2;

/// Weights of the approach, steering and effort terms of the driving reward.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct RewardGains {
    pub k_a: f64,
    pub k_s: f64,
    pub k_c: f64,
    /// Keep the approach and steering terms active once the target leaves
    /// the initialization disc. When false, an escaped target costs nothing.
    pub penalize_escape: bool,
}

impl Default for RewardGains {
    fn default() -> Self {
        Self { k_a: 5e-2, k_s: 1e-1, k_c: 2e-2, penalize_escape: true }
    }
}

impl RewardGains {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_s > self.k_a && self.k_a > self.k_c && self.k_c > 0.0) {
            return Err(Error::Config("reward gains must satisfy k_s > k_a > k_c > 0".into()));
        }
        Ok(())
    }
}

/// `-k_a |T - H| 1[T] - k_s (|T| - rho_G) 1[T] - k_c |u|`, where the
/// indicator is 1 while the target lies outside the goal and, unless
/// `penalize_escape` is set, inside the initialization disc.
pub fn driving_reward(target: Vec2, herder: Vec2, control: Vec2, regions: &Regions, gains: &RewardGains) -> f64 {
    let r = target.norm();
    let active = r > regions.goal_radius && (gains.penalize_escape || r <= regions.init_radius);
    let shaped = if active {
        gains.k_a * target.distance(herder) + gains.k_s * (r - regions.goal_radius)
    } else {
        0.0
    };
    -shaped - gains.k_c * control.norm()
}
