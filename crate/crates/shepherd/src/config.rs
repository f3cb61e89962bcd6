//! Run configuration, read from TOML. Every key is optional; missing keys
//! take the defaults below and unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use shepherd_core::control::VortexParams;
use shepherd_core::dynamics::WorldParams;
use shepherd_core::geometry::{ObstacleShape, Regions};
use shepherd_core::rl::{PpoConfig, RewardGains};
use shepherd_core::sim::{EpisodeSpec, Scenario};

use crate::error::{Result, RunError};

/// Named agent and obstacle counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum Preset {
    /// One herder, one target, one obstacle.
    #[serde(rename = "1h1t")]
    #[value(name = "1h1t")]
    Single,
    /// Ten herders, one hundred targets, three obstacles.
    #[serde(rename = "10h100t")]
    #[value(name = "10h100t")]
    Multi,
}

impl Preset {
    pub fn scenario(self) -> Scenario {
        match self {
            Preset::Single => Scenario::single(),
            Preset::Multi => Scenario::multi(),
        }
    }

    /// Evaluation horizon in ticks.
    pub fn default_cap_steps(self) -> usize {
        match self {
            Preset::Single => 5_000,
            Preset::Multi => 30_000,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Single => "1h1t",
            Preset::Multi => "10h100t",
        }
    }
}

/// A preset with optional overrides of its counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub preset: Preset,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub herders: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub targets: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub obstacles: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_obstacle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cone_fraction: Option<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            preset: Preset::Single,
            herders: None,
            targets: None,
            obstacles: None,
            p_obstacle: None,
            cone_fraction: None,
        }
    }
}

impl ScenarioConfig {
    pub fn preset(preset: Preset) -> Self {
        Self { preset, ..Self::default() }
    }

    pub fn resolve(&self) -> Scenario {
        let base = self.preset.scenario();
        Scenario {
            herders: self.herders.unwrap_or(base.herders),
            targets: self.targets.unwrap_or(base.targets),
            obstacles: self.obstacles.unwrap_or(base.obstacles),
            p_obstacle: self.p_obstacle.unwrap_or(base.p_obstacle),
            cone_fraction: self.cone_fraction.unwrap_or(base.cone_fraction),
        }
    }

    /// Pins every count to its resolved value.
    fn pinned(&self) -> Self {
        let s = self.resolve();
        Self {
            preset: self.preset,
            herders: Some(s.herders),
            targets: Some(s.targets),
            obstacles: Some(s.obstacles),
            p_obstacle: Some(s.p_obstacle),
            cone_fraction: Some(s.cone_fraction),
        }
    }
}

/// Low-level driving law used in evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Ppo,
    Vortex,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Ppo => "ppo",
            Strategy::Vortex => "vortex",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub strategy: Strategy,
    /// Weights file; required for the learned strategy.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<PathBuf>,
    pub episodes: usize,
    pub chi_star: f64,
    /// Defaults to the preset's horizon.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap_steps: Option<usize>,
    pub keep_trajectories: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Ppo,
            policy: None,
            episodes: 200,
            chi_star: 1.0,
            cap_steps: None,
            keep_trajectories: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub calls: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { calls: 100_000, policy: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub scenario: ScenarioConfig,
    pub regions: Regions,
    pub obstacle: ObstacleShape,
    pub world: WorldParams,
    pub ppo: PpoConfig,
    pub reward: RewardGains,
    pub vortex: VortexParams,
    pub eval: EvalConfig,
    pub bench: BenchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: PathBuf::from("runs/default"),
            scenario: ScenarioConfig::default(),
            regions: Regions::default(),
            obstacle: ObstacleShape::default(),
            world: WorldParams::default(),
            ppo: PpoConfig::default(),
            reward: RewardGains::default(),
            vortex: VortexParams::default(),
            eval: EvalConfig::default(),
            bench: BenchConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            RunError::Config(msg) => RunError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.regions.validate()?;
        self.obstacle.validate()?;
        self.world.validate()?;
        self.ppo.validate()?;
        self.reward.validate()?;
        self.scenario.resolve().validate()?;
        let v = &self.vortex;
        for (name, value) in [
            ("vortex.standoff", v.standoff),
            ("vortex.attraction_gain", v.attraction_gain),
            ("vortex.standoff_gain", v.standoff_gain),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(RunError::Config(format!("{name} must be > 0")));
            }
        }
        if !(v.vortex_gain >= 0.0 && v.vortex_gain.is_finite()) {
            return Err(RunError::Config("vortex.vortex_gain must be >= 0".into()));
        }
        if !(self.eval.chi_star > 0.0 && self.eval.chi_star <= 1.0) {
            return Err(RunError::Config("eval.chi_star must lie in (0, 1]".into()));
        }
        if self.eval.episodes == 0 {
            return Err(RunError::Config("eval.episodes must be > 0".into()));
        }
        if self.eval.cap_steps == Some(0) {
            return Err(RunError::Config("eval.cap_steps must be > 0".into()));
        }
        if self.bench.calls == 0 {
            return Err(RunError::Config("bench.calls must be > 0".into()));
        }
        Ok(())
    }

    pub fn cap_steps(&self) -> usize {
        self.eval.cap_steps.unwrap_or_else(|| self.scenario.preset.default_cap_steps())
    }

    pub fn episode_spec(&self) -> EpisodeSpec {
        EpisodeSpec {
            scenario: self.scenario.resolve(),
            regions: self.regions,
            shape: self.obstacle,
            world: self.world,
            chi_star: self.eval.chi_star,
            cap_steps: self.cap_steps(),
        }
    }

    /// Copy with every defaulted value written out, so that loading the echo
    /// reproduces this run exactly.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        c.scenario = self.scenario.pinned();
        c.eval.cap_steps = Some(self.cap_steps());
        c
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| RunError::Config(e.to_string()))
    }

    /// Writes the resolved configuration to `dir/config.toml`.
    pub fn echo(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("config.toml");
        let text = self.resolved().to_toml()?;
        crate::io::write_file(&path, text.as_bytes())?;
        Ok(path)
    }
}
