//! File helpers and on-disk formats: weights, episode tables, trajectories.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use shepherd_core::geometry::{ObstacleField, Regions};
use shepherd_core::nn::{weights, GaussianPolicy};
use shepherd_core::sim::{EpisodeOutcome, Frame, RadiiSample};

use crate::error::{Result, RunError};

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))
}

/// Writes `bytes` to `path`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    fs::write(path, bytes).map_err(|e| RunError::io(path, e))
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| RunError::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| RunError::io(path, e.into()))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let bytes = read_file(path)?;
    serde_json::from_slice(&bytes).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))
}

pub fn save_policy(path: &Path, policy: &GaussianPolicy) -> Result<()> {
    write_file(path, &weights::encode(policy))
}

pub fn load_policy(path: &Path) -> Result<GaussianPolicy> {
    let bytes = read_file(path)?;
    weights::decode(&bytes).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> RunError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => RunError::io(path, io),
        other => RunError::Config(format!("{}: {other:?}", path.display())),
    }
}

/// Writes serializable rows (with a header) to a CSV file.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| RunError::io(path, e))
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_error(path, e))).collect()
}

/// One row of the per-episode evaluation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub episode: usize,
    pub seed: u64,
    pub succeeded: bool,
    pub gathering_step: Option<usize>,
    pub gathering_time: Option<f64>,
    pub steps: usize,
    pub path_length: f64,
    pub final_chi: f64,
    pub cone_start: bool,
}

impl EpisodeRow {
    pub fn of(index: usize, outcome: &EpisodeOutcome, dt: f64) -> Self {
        let r = &outcome.record;
        Self {
            episode: index,
            seed: outcome.seed,
            succeeded: r.succeeded,
            gathering_step: r.gathering_step,
            gathering_time: r.gathering_step.map(|s| s as f64 * dt),
            steps: r.steps,
            path_length: r.path_length(),
            final_chi: r.chi_series.last().copied().unwrap_or(0.0),
            cone_start: outcome.init.cone_start,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Herder,
    Target,
}

/// One agent position at one recorded step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub agent_kind: AgentKind,
    pub agent_index: usize,
    pub x: f64,
    pub y: f64,
}

pub fn write_trajectory(path: &Path, frames: &[Frame]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for (step, f) in frames.iter().enumerate() {
        let agents = f
            .herders
            .iter()
            .enumerate()
            .map(|(i, p)| (AgentKind::Herder, i, p))
            .chain(f.targets.iter().enumerate().map(|(i, p)| (AgentKind::Target, i, p)));
        for (agent_kind, agent_index, p) in agents {
            let row = TrajectoryRow { step, agent_kind, agent_index, x: p.x, y: p.y };
            w.serialize(row).map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| RunError::io(path, e))
}

/// Rebuilds frames from a trajectory table.
pub fn read_trajectory(path: &Path) -> Result<Vec<Frame>> {
    let rows: Vec<TrajectoryRow> = read_csv(path)?;
    let mut frames: Vec<Frame> = Vec::new();
    for row in rows {
        if row.step == frames.len() {
            frames.push(Frame { herders: Vec::new(), targets: Vec::new() });
        } else if row.step + 1 != frames.len() {
            return Err(RunError::Config(format!("{}: steps out of order at step {}", path.display(), row.step)));
        }
        let f = frames.last_mut().expect("frame pushed above");
        let list = match row.agent_kind {
            AgentKind::Herder => &mut f.herders,
            AgentKind::Target => &mut f.targets,
        };
        list.push(shepherd_core::Vec2::new(row.x, row.y));
    }
    Ok(frames)
}

/// Obstacle description stored next to trajectory tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleJson {
    pub center: [f64; 2],
    pub orientation: [f64; 2],
    pub half_long: f64,
    pub half_short: f64,
    pub corner_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryJson {
    pub goal_radius: f64,
    pub init_radius: f64,
    pub obstacles: Vec<ObstacleJson>,
}

impl GeometryJson {
    pub fn of(regions: &Regions, field: &ObstacleField) -> Self {
        Self {
            goal_radius: regions.goal_radius,
            init_radius: regions.init_radius,
            obstacles: field
                .obstacles
                .iter()
                .map(|o| ObstacleJson {
                    center: o.center.to_array(),
                    orientation: o.orientation.to_array(),
                    half_long: o.half_long,
                    half_short: o.half_short,
                    corner_radius: o.corner_radius,
                })
                .collect(),
        }
    }

    pub fn obstacles(&self) -> Vec<shepherd_core::geometry::Obstacle> {
        self.obstacles
            .iter()
            .map(|o| shepherd_core::geometry::Obstacle {
                center: o.center.into(),
                orientation: o.orientation.into(),
                half_long: o.half_long,
                half_short: o.half_short,
                corner_radius: o.corner_radius,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiiRow {
    pub step: usize,
    pub target_mean: f64,
    pub target_std: f64,
    pub target_max: f64,
    pub herder_mean: f64,
    pub herder_std: f64,
}

pub fn write_radii(path: &Path, radii: &[RadiiSample]) -> Result<()> {
    let rows: Vec<RadiiRow> = radii
        .iter()
        .enumerate()
        .map(|(step, r)| RadiiRow {
            step,
            target_mean: r.target_mean,
            target_std: r.target_std,
            target_max: r.target_max,
            herder_mean: r.herder_mean,
            herder_std: r.herder_std,
        })
        .collect();
    write_csv(path, &rows)
}

/// Paths of the files describing one kept episode.
pub fn episode_paths(dir: &Path, episode: usize) -> (PathBuf, PathBuf, PathBuf) {
    let stem = format!("episode_{episode:04}");
    (
        dir.join(format!("{stem}.csv")),
        dir.join(format!("{stem}_geometry.json")),
        dir.join(format!("{stem}_radii.csv")),
    )
}
