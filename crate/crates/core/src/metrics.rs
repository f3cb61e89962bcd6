//! Shepherding performance measures: fraction of targets in the goal,
//! gathering time, herder path length and campaign aggregates.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::Regions;
use crate::Vec2;

/// Per-episode measurements.
///
/// `chi_series[t]` is the goal fraction of the state after `t` ticks, so it
/// holds `steps` entries; `herder_displacements[t][j]` is how far herder `j`
/// moved between states `t` and `t + 1`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeRecord {
    pub chi_series: Vec<f64>,
    pub herder_displacements: Vec<Vec<f64>>,
    pub steps: usize,
    pub succeeded: bool,
    pub gathering_step: Option<usize>,
}

impl EpisodeRecord {
    /// Mean distance travelled per herder.
    pub fn path_length(&self) -> f64 {
        path_length(&self.herder_displacements)
    }

    /// Distance travelled by each herder.
    pub fn per_herder_path_lengths(&self) -> Vec<f64> {
        let n = self.herder_displacements.first().map_or(0, Vec::len);
        let mut totals = alloc::vec![0.0; n];
        for step in &self.herder_displacements {
            for (t, d) in totals.iter_mut().zip(step) {
                *t += d;
            }
        }
        totals
    }
}

/// Fraction of `targets` inside the closed goal disc.
pub fn chi(targets: &[Vec2], regions: &Regions) -> f64 {
    if targets.is_empty() {
        return 0.0;
    }
    let inside = targets.iter().filter(|t| regions.in_goal(**t)).count();
    inside as f64 / targets.len() as f64
}

/// First index at which the series reaches `chi_star`.
pub fn gathering_time(chi_series: &[f64], chi_star: f64) -> Option<usize> {
    chi_series.iter().position(|&c| c >= chi_star)
}

/// `(1/N) sum_j sum_t |dH_j(t)|` from per-step, per-herder step lengths.
pub fn path_length(herder_displacements: &[Vec<f64>]) -> f64 {
    let n = match herder_displacements.first() {
        Some(row) if !row.is_empty() => row.len(),
        _ => return 0.0,
    };
    let total: f64 = herder_displacements.iter().flatten().sum();
    total / n as f64
}

/// Mean and population standard deviation (divisor `n`).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Some(Stat {
            mean,
            std: libm::sqrt(var),
            count: values.len(),
        })
    }
}

/// Campaign-level statistics.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Summary {
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Gathering time in ticks over successful episodes only.
    pub gathering_steps: Option<Stat>,
    /// Per-episode mean herder path length, over all episodes.
    pub path_length: Stat,
    /// Path length of every individual herder in every episode.
    pub path_length_per_herder: Stat,
}

pub fn aggregate(records: &[EpisodeRecord]) -> Result<Summary> {
    if records.is_empty() {
        return Err(Error::Config("cannot aggregate zero episode records".into()));
    }
    let successes = records.iter().filter(|r| r.succeeded).count();
    let tg: Vec<f64> = records
        .iter()
        .filter(|r| r.succeeded)
        .filter_map(|r| r.gathering_step.map(|s| s as f64))
        .collect();
    let paths: Vec<f64> = records.iter().map(EpisodeRecord::path_length).collect();
    let per_herder: Vec<f64> = records.iter().flat_map(|r| r.per_herder_path_lengths()).collect();
    let zero = Stat { mean: 0.0, std: 0.0, count: 0 };
    Ok(Summary {
        episodes: records.len(),
        successes,
        success_rate: successes as f64 / records.len() as f64,
        gathering_steps: Stat::of(&tg),
        path_length: Stat::of(&paths).unwrap_or(zero),
        path_length_per_herder: Stat::of(&per_herder).unwrap_or(zero),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn chi_examples() {
        let g = Regions::default();
        assert_eq!(chi(&[Vec2::ZERO; 3], &g), 1.0);
        assert_eq!(chi(&[Vec2::new(10.0, 0.0), Vec2::new(0.0, -10.0)], &g), 0.0);
        let t = [Vec2::new(1.0, 0.0), Vec2::new(0.0, 2.0), Vec2::new(-3.0, 0.0), Vec2::new(9.0, 9.0)];
        assert_eq!(chi(&t, &g), 0.75);
    }

    #[test]
    fn gathering_time_examples() {
        assert_eq!(gathering_time(&[0.0, 0.5, 1.0, 1.0], 1.0), Some(2));
        assert_eq!(gathering_time(&[0.0, 0.5, 0.99], 1.0), None);
    }

    #[test]
    fn path_length_examples() {
        assert_eq!(path_length(&vec![vec![0.0]; 10]), 0.0);
        let moving = vec![vec![0.08]; 100];
        assert!((path_length(&moving) - 8.0).abs() < 1e-12);
        let pair = vec![vec![0.0, 0.5]; 4];
        assert_eq!(path_length(&pair), 1.0);
    }

    fn record(success: bool, tg: Option<usize>, step_len: f64) -> EpisodeRecord {
        EpisodeRecord {
            chi_series: vec![0.0; 3],
            herder_displacements: vec![vec![step_len]; 2],
            steps: 3,
            succeeded: success,
            gathering_step: tg,
        }
    }

    #[test]
    fn aggregate_examples() {
        assert!(aggregate(&[]).is_err());
        let one = aggregate(&[record(true, Some(40), 1.0)]).unwrap();
        assert_eq!(one.gathering_steps.unwrap().std, 0.0);
        let fails = aggregate(&[record(false, None, 1.0), record(false, None, 2.0)]).unwrap();
        assert_eq!(fails.success_rate, 0.0);
        assert!(fails.gathering_steps.is_none());

        // t_g over successes {10, 30}: mean 20, std 10. Paths {2, 4, 6}: mean 4, std sqrt(8/3).
        let three = aggregate(&[
            record(true, Some(10), 1.0),
            record(false, None, 2.0),
            record(true, Some(30), 3.0),
        ])
        .unwrap();
        let tg = three.gathering_steps.unwrap();
        assert_eq!((tg.mean, tg.std, tg.count), (20.0, 10.0, 2));
        assert!((three.path_length.mean - 4.0).abs() < 1e-12);
        assert!((three.path_length.std - (8.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((three.success_rate - 2.0 / 3.0).abs() < 1e-15);
    }
}
