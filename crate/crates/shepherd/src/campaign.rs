//! `eval` command: runs seeded episodes with one driving law and writes
//! per-episode records, a metrics summary and optional trajectories.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use shepherd_core::control::Driver;
use shepherd_core::metrics::{aggregate, Stat, Summary};
use shepherd_core::nn::GaussianPolicy;
use shepherd_core::sim::{episode_seed, run_episode, EpisodeOutcome, Scenario};

use crate::config::{RunConfig, Strategy};
use crate::error::{Result, RunError};
use crate::io::{self, EpisodeRow, GeometryJson};

pub const METRICS_FILE: &str = "metrics.json";
pub const EPISODES_FILE: &str = "episodes.csv";
pub const TRAJECTORY_DIR: &str = "trajectories";
pub const METRICS_SCHEMA_VERSION: u32 = 1;

/// Number of worker threads: `SHEPHERD_THREADS` if set, else all cores.
pub fn worker_threads() -> Result<usize> {
    match std::env::var("SHEPHERD_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(RunError::Config(format!("SHEPHERD_THREADS must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs `f` on a pool sized by [`worker_threads`].
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_threads()?)
        .build()
        .map_err(|e| RunError::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Success-rate figures published for the original method, kept next to our
/// own numbers for comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub success_rate: f64,
    pub label: String,
}

pub fn reference_for(strategy: Strategy, scenario: &Scenario) -> Option<Reference> {
    let single = scenario.herders == 1 && scenario.targets == 1;
    match (strategy, single) {
        (Strategy::Vortex, true) => Some(Reference { success_rate: 0.965, label: "published vortex heuristic, 1 herder 1 target".into() }),
        (Strategy::Ppo, true) => Some(Reference { success_rate: 0.993, label: "published learned policy, 1 herder 1 target".into() }),
        (Strategy::Ppo, false) if scenario.herders == 10 && scenario.targets == 100 => {
            Some(Reference { success_rate: 0.997, label: "published learned policy, 10 herders 100 targets".into() })
        }
        _ => None,
    }
}

/// Contents of `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub strategy: Strategy,
    pub scenario: Scenario,
    pub master_seed: u64,
    pub chi_star: f64,
    pub cap_steps: usize,
    pub dt: f64,
    pub summary: Summary,
    /// Gathering time of successful episodes in seconds (ticks times dt).
    pub gathering_seconds: Option<Stat>,
    pub reference: Option<Reference>,
    /// Our success rate minus the reference, when one exists.
    pub reference_gap: Option<f64>,
}

/// In-memory result of an evaluation campaign.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub outcomes: Vec<EpisodeOutcome>,
    pub report: MetricsReport,
}

impl Campaign {
    pub fn rows(&self, dt: f64) -> Vec<EpisodeRow> {
        self.outcomes.iter().enumerate().map(|(i, o)| EpisodeRow::of(i, o, dt)).collect()
    }
}

/// Runs `cfg.eval.episodes` episodes. Episode `k` uses
/// `episode_seed(cfg.seed, k)`, so strategies compared under the same master
/// seed see identical initial conditions and noise.
pub fn run_campaign(cfg: &RunConfig, policy: Option<&GaussianPolicy>, keep_frames: bool) -> Result<Campaign> {
    let spec = cfg.episode_spec();
    let driver = match (cfg.eval.strategy, policy) {
        (Strategy::Vortex, _) => Driver::Vortex(cfg.vortex),
        (Strategy::Ppo, Some(p)) => Driver::Policy(p),
        (Strategy::Ppo, None) => return Err(RunError::Config("the ppo strategy needs a policy file".into())),
    };
    let seeds: Vec<u64> = (0..cfg.eval.episodes as u64).map(|k| episode_seed(cfg.seed, k)).collect();
    let outcomes = with_pool(|| {
        seeds
            .par_iter()
            .map(|&s| run_episode(&spec, &driver, s, keep_frames))
            .collect::<shepherd_core::Result<Vec<_>>>()
    })??;
    let records: Vec<_> = outcomes.iter().map(|o| o.record.clone()).collect();
    let summary = aggregate(&records)?;
    let dt = cfg.world.dt;
    let gathering_seconds = summary.gathering_steps.map(|s| Stat { mean: s.mean * dt, std: s.std * dt, count: s.count });
    let reference = reference_for(cfg.eval.strategy, &spec.scenario);
    let report = MetricsReport {
        schema_version: METRICS_SCHEMA_VERSION,
        strategy: cfg.eval.strategy,
        scenario: spec.scenario,
        master_seed: cfg.seed,
        chi_star: spec.chi_star,
        cap_steps: spec.cap_steps,
        dt,
        reference_gap: reference.as_ref().map(|r| summary.success_rate - r.success_rate),
        summary,
        gathering_seconds,
        reference,
    };
    Ok(Campaign { outcomes, report })
}

/// Representative episode for radii plots: the first success, else episode 0.
pub fn representative(outcomes: &[EpisodeOutcome]) -> usize {
    outcomes.iter().position(|o| o.record.succeeded).unwrap_or(0)
}

/// Runs the campaign and writes its artifacts under `out`.
pub fn run_eval(cfg: &RunConfig, out: &Path) -> Result<Campaign> {
    io::create_dir(out)?;
    cfg.echo(out)?;
    let policy = match cfg.eval.strategy {
        Strategy::Ppo => {
            let path = cfg
                .eval
                .policy
                .as_deref()
                .ok_or_else(|| RunError::Config("the ppo strategy needs eval.policy or --policy".into()))?;
            Some(io::load_policy(path)?)
        }
        Strategy::Vortex => None,
    };
    let campaign = run_campaign(cfg, policy.as_ref(), cfg.eval.keep_trajectories)?;
    io::write_csv(&out.join(EPISODES_FILE), &campaign.rows(cfg.world.dt))?;
    io::write_json(&out.join(METRICS_FILE), &campaign.report)?;
    let rep = representative(&campaign.outcomes);
    io::write_radii(&out.join("radii.csv"), &campaign.outcomes[rep].radii)?;
    if cfg.eval.keep_trajectories {
        let dir = out.join(TRAJECTORY_DIR);
        for (k, o) in campaign.outcomes.iter().enumerate() {
            let (traj, geom, radii) = io::episode_paths(&dir, k);
            io::write_trajectory(&traj, &o.frames)?;
            io::write_json(&geom, &GeometryJson::of(&cfg.regions, &o.init.field))?;
            io::write_radii(&radii, &o.radii)?;
        }
    }
    Ok(campaign)
}

/// One line per campaign for the terminal.
pub fn summary_line(report: &MetricsReport) -> String {
    let s = &report.summary;
    let mut line = format!(
        "{}: success {}/{} ({:.1}%)",
        report.strategy.name(),
        s.successes,
        s.episodes,
        100.0 * s.success_rate
    );
    if let (Some(tg), Some(sec)) = (s.gathering_steps, report.gathering_seconds) {
        line += &format!(
            ", gathering time {:.0} +- {:.0} steps ({:.2} +- {:.2} s)",
            tg.mean, tg.std, sec.mean, sec.std
        );
    }
    line += &format!(", path length {:.1} +- {:.1}", s.path_length.mean, s.path_length.std);
    if let Some(r) = &report.reference {
        line += &format!("; reference {:.1}% ({})", 100.0 * r.success_rate, r.label);
    }
    line
}
