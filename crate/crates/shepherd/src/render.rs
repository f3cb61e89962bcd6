//! `render` command: turns the artifacts of a run directory into SVG figures.

use std::path::{Path, PathBuf};

use crate::campaign::TRAJECTORY_DIR;
use crate::config::RunConfig;
use crate::error::{Result, RunError};
use crate::io::{self, GeometryJson, RadiiRow};
use crate::svg;
use crate::training::{read_episode_log, EPISODE_LOG};

/// Renders whatever `run` holds: the training reward curve, the radii of the
/// representative episode, and the first kept trajectory. Figures go to
/// `out`. Fails when the directory has none of these artifacts or when one
/// of them is empty.
pub fn run_render(run: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    if !run.is_dir() {
        return Err(RunError::MissingArtifact(format!("run directory {} does not exist", run.display())));
    }
    let cfg_path = run.join("config.toml");
    let cfg = if cfg_path.exists() { RunConfig::load(&cfg_path)? } else { RunConfig::default() };
    let mut written = Vec::new();

    let log = run.join(EPISODE_LOG);
    if log.exists() {
        let rows = read_episode_log(&log)?;
        if rows.is_empty() {
            return Err(RunError::MissingArtifact(format!("{} has no episodes", log.display())));
        }
        written.push(emit(out, "reward_curve.svg", svg::reward_curve(&rows)?)?);
    }

    let radii = run.join("radii.csv");
    if radii.exists() {
        let rows: Vec<RadiiRow> = io::read_csv(&radii)?;
        if rows.is_empty() {
            return Err(RunError::MissingArtifact(format!("{} has no rows", radii.display())));
        }
        written.push(emit(out, "radii.svg", svg::radii(&rows, cfg.regions.goal_radius, cfg.world.dt)?)?);
    }

    let (traj, geom, _) = io::episode_paths(&run.join(TRAJECTORY_DIR), 0);
    if traj.exists() {
        if !geom.exists() {
            return Err(RunError::MissingArtifact(format!("{} (geometry for {})", geom.display(), traj.display())));
        }
        let frames = io::read_trajectory(&traj)?;
        if frames.is_empty() {
            return Err(RunError::MissingArtifact(format!("{} has no rows", traj.display())));
        }
        let geometry: GeometryJson = io::read_json(&geom)?;
        written.push(emit(out, "trajectories.svg", svg::trajectories(&frames, &geometry)?)?);
    }

    if written.is_empty() {
        return Err(RunError::MissingArtifact(format!(
            "{} holds none of {EPISODE_LOG}, radii.csv, {TRAJECTORY_DIR}/episode_0000.csv",
            run.display()
        )));
    }
    Ok(written)
}

fn emit(out: &Path, name: &str, doc: String) -> Result<PathBuf> {
    let path = out.join(name);
    io::write_file(&path, doc.as_bytes())?;
    Ok(path)
}
