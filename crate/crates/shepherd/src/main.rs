use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use shepherd::bench::bench_policy;
use shepherd::campaign::{run_eval, summary_line};
use shepherd::config::ScenarioConfig;
use shepherd::render::run_render;
use shepherd::training::run_train;
use shepherd::{io, Preset, Result, RunConfig, Strategy};

/// Decentralized shepherding of diffusive targets around obstacles.
#[derive(Parser)]
#[command(name = "shepherd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; defaults apply to every missing key.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<(RunConfig, PathBuf)> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        let out = self.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
        cfg.output_dir = out.clone();
        Ok((cfg, out))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train the driving policy with PPO.
    Train {
        #[command(flatten)]
        common: Common,
        /// Total training episodes over all environments.
        #[arg(long)]
        episodes: Option<usize>,
        /// Suppress per-update progress lines.
        #[arg(long)]
        quiet: bool,
    },
    /// Evaluate a driving law over seeded episodes.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        strategy: Option<Strategy>,
        /// Weights file of a trained policy.
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long, value_enum)]
        scenario: Option<Preset>,
        /// Write per-episode trajectory tables and geometry.
        #[arg(long)]
        keep_trajectories: bool,
    },
    /// Draw SVG figures from the artifacts of a run directory.
    Render {
        #[command(flatten)]
        common: Common,
        /// Directory written by `train` or `eval`.
        #[arg(long)]
        run: PathBuf,
    },
    /// Time policy inference.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long)]
        calls: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { common, episodes, quiet } => {
            let (mut cfg, out) = common.load()?;
            if let Some(n) = episodes {
                cfg.ppo.total_episodes = n;
            }
            cfg.validate()?;
            let path = run_train(&cfg, &out, quiet)?;
            println!("policy written to {}", path.display());
        }
        Command::Eval { common, strategy, policy, episodes, scenario, keep_trajectories } => {
            let (mut cfg, out) = common.load()?;
            if let Some(s) = strategy {
                cfg.eval.strategy = s;
            }
            if policy.is_some() {
                cfg.eval.policy = policy;
            }
            if let Some(n) = episodes {
                cfg.eval.episodes = n;
            }
            if let Some(p) = scenario {
                cfg.scenario = ScenarioConfig::preset(p);
                cfg.eval.cap_steps = None;
            }
            cfg.eval.keep_trajectories |= keep_trajectories;
            cfg.validate()?;
            let campaign = run_eval(&cfg, &out)?;
            println!("{}", summary_line(&campaign.report));
        }
        Command::Render { common, run } => {
            let out = common.out.clone().unwrap_or_else(|| run.join("figures"));
            for path in run_render(&run, &out)? {
                println!("{}", path.display());
            }
        }
        Command::Bench { common, policy, calls } => {
            let (mut cfg, out) = common.load()?;
            if policy.is_some() {
                cfg.bench.policy = policy;
            }
            if let Some(n) = calls {
                cfg.bench.calls = n;
            }
            cfg.validate()?;
            let weights = match &cfg.bench.policy {
                Some(p) => io::load_policy(p)?,
                None => shepherd_core::rl::train::initial_policy(&cfg.regions, &cfg.world, cfg.seed)?,
            };
            let report = bench_policy(&weights, cfg.bench.calls, cfg.regions.init_radius, cfg.seed)?;
            io::write_json(&Path::new(&out).join("bench.json"), &report)?;
            println!(
                "policy_control: {:.4} +- {:.4} ms over {} calls",
                report.mean_ms, report.std_ms, report.calls
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
