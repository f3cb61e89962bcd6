//! `train` command: runs PPO and streams logs and checkpoints to disk.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use shepherd_core::nn::GaussianPolicy;
use shepherd_core::rl::{self, EpisodeLog, TrainingSink, UpdateLog};

use crate::config::RunConfig;
use crate::error::{Result, RunError};
use crate::io;

pub const EPISODE_LOG: &str = "training_episodes.csv";
pub const UPDATE_LOG: &str = "training_updates.jsonl";
pub const POLICY_FILE: &str = "policy.shrd";
pub const CHECKPOINT_DIR: &str = "checkpoints";

/// Row of the per-episode training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLogRow {
    pub episode: u64,
    pub cumulative_reward: f64,
    pub length: usize,
    pub success: bool,
}

/// Appends logs as they arrive and writes checkpoints under `dir`.
pub struct FileSink {
    dir: PathBuf,
    episodes: csv::Writer<BufWriter<File>>,
    updates: BufWriter<File>,
    /// First IO failure, reported with its path once training returns.
    failure: Option<RunError>,
    quiet: bool,
}

impl FileSink {
    pub fn create(dir: &Path, quiet: bool) -> Result<Self> {
        io::create_dir(dir)?;
        let ep_path = dir.join(EPISODE_LOG);
        let ep_file = File::create(&ep_path).map_err(|e| RunError::io(&ep_path, e))?;
        let up_path = dir.join(UPDATE_LOG);
        let up_file = File::create(&up_path).map_err(|e| RunError::io(&up_path, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            episodes: csv::Writer::from_writer(BufWriter::new(ep_file)),
            updates: BufWriter::new(up_file),
            failure: None,
            quiet,
        })
    }

    fn record<T>(&mut self, r: Result<T>) -> shepherd_core::Result<T> {
        r.map_err(|e| {
            let msg = e.to_string();
            self.failure.get_or_insert(e);
            shepherd_core::Error::Sink(msg)
        })
    }

    pub fn finish(mut self) -> Result<()> {
        if let Some(e) = self.failure.take() {
            return Err(e);
        }
        let ep_path = self.dir.join(EPISODE_LOG);
        self.episodes.flush().map_err(|e| RunError::io(&ep_path, e))?;
        let up_path = self.dir.join(UPDATE_LOG);
        self.updates.flush().map_err(|e| RunError::io(&up_path, e))
    }

    fn take_failure(&mut self) -> Option<RunError> {
        self.failure.take()
    }
}

impl TrainingSink for FileSink {
    fn on_episode(&mut self, log: &EpisodeLog) -> shepherd_core::Result<()> {
        let row = EpisodeLogRow {
            episode: log.episode,
            cumulative_reward: log.cumulative_reward,
            length: log.length,
            success: log.success,
        };
        let path = self.dir.join(EPISODE_LOG);
        let r = self.episodes.serialize(row).map_err(|e| io::csv_error(&path, e));
        self.record(r)
    }

    fn on_update(&mut self, log: &UpdateLog, _policy: &GaussianPolicy) -> shepherd_core::Result<()> {
        if !self.quiet {
            eprintln!(
                "update {:>5}  episodes {:>7}  reward {:>10}  success {:>5}  std [{:.3}, {:.3}]",
                log.update,
                log.episodes_completed,
                log.mean_episode_reward.map_or("-".into(), |r| format!("{r:.1}")),
                log.success_rate.map_or("-".into(), |s| format!("{s:.2}")),
                log.std[0],
                log.std[1],
            );
        }
        let path = self.dir.join(UPDATE_LOG);
        let r = serde_json::to_string(log)
            .map_err(|e| RunError::io(&path, e.into()))
            .and_then(|line| writeln!(self.updates, "{line}").and_then(|_| self.updates.flush()).map_err(|e| RunError::io(&path, e)))
            .and_then(|_| self.episodes.flush().map_err(|e| RunError::io(self.dir.join(EPISODE_LOG), e)));
        self.record(r)
    }

    fn checkpoint(&mut self, update: usize, policy: &GaussianPolicy) -> shepherd_core::Result<()> {
        let path = self.dir.join(CHECKPOINT_DIR).join(format!("update_{update:05}.shrd"));
        let r = io::save_policy(&path, policy);
        self.record(r)
    }
}

/// Trains a policy as configured, writing everything under `out`. Returns the
/// path of the final weights.
pub fn run_train(cfg: &RunConfig, out: &Path, quiet: bool) -> Result<PathBuf> {
    io::create_dir(out)?;
    cfg.echo(out)?;
    let mut sink = FileSink::create(out, quiet)?;
    let result = rl::train(&cfg.ppo, &cfg.regions, &cfg.obstacle, &cfg.world, &cfg.reward, cfg.seed, &mut sink);
    let outcome = match result {
        Ok(o) => o,
        Err(e) => return Err(sink.take_failure().unwrap_or_else(|| e.into())),
    };
    sink.finish()?;
    let path = out.join(POLICY_FILE);
    io::save_policy(&path, &outcome.policy)?;
    Ok(path)
}

/// Reads the per-episode training log back.
pub fn read_episode_log(path: &Path) -> Result<Vec<EpisodeLogRow>> {
    io::read_csv(path)
}
