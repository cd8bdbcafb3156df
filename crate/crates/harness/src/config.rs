//! Experiment configuration: file format, validation and built-in defaults.

use crate::error::{HarnessError, Result};
use retroplan_core::envs::{LeveledChainSpec, MazeLayout, MazeSpec, Stochasticity};
use retroplan_core::learn::LinearSchedule;
use retroplan_core::planning::{DecayClock, Direction, ReferenceFrame, Schedules};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    PredictChain,
    ControlMaze,
    SweepFanRatio,
    ReferenceFrameAblation,
    StochasticityAblation,
}

impl ExperimentKind {
    pub fn is_prediction(self) -> bool {
        matches!(
            self,
            ExperimentKind::PredictChain | ExperimentKind::SweepFanRatio
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Desk,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Environments compared side by side, each with its own schedules.
    pub settings: Vec<SettingConfig>,
    /// Agents run in every setting.
    pub variants: Vec<VariantConfig>,
    pub seeds: Vec<u64>,
    /// Interactions for prediction, episodes for control.
    pub horizon: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingConfig {
    pub label: String,
    pub environment: EnvironmentConfig,
    pub schedules: ScheduleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentConfig {
    LeveledChain(ChainConfig),
    Maze(MazeConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub level_sizes: Vec<usize>,
    #[serde(default = "default_reward_mean")]
    pub reward_mean: f64,
    #[serde(default = "default_reward_std")]
    pub reward_std: f64,
    #[serde(default = "default_chain_discount")]
    pub discount: f64,
}

fn default_reward_mean() -> f64 {
    10.0
}

fn default_reward_std() -> f64 {
    10.0
}

fn default_chain_discount() -> f64 {
    1.0
}

impl ChainConfig {
    pub fn new(level_sizes: Vec<usize>) -> Self {
        Self {
            level_sizes,
            reward_mean: default_reward_mean(),
            reward_std: default_reward_std(),
            discount: default_chain_discount(),
        }
    }

    /// Chain shape; every seed draws its own chain.
    pub fn spec(&self, seed: u64) -> LeveledChainSpec {
        LeveledChainSpec {
            level_sizes: self.level_sizes.clone(),
            reward_mean: self.reward_mean,
            reward_std: self.reward_std,
            discount: self.discount,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MazeConfig {
    /// Layout file; the bundled maze when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout_file: Option<PathBuf>,
    pub stochasticity: StochasticityConfig,
    #[serde(default = "default_max_steps")]
    pub max_episode_steps: usize,
    #[serde(default = "default_maze_discount")]
    pub discount: f64,
}

fn default_max_steps() -> usize {
    400
}

fn default_maze_discount() -> f64 {
    0.99
}

impl MazeConfig {
    pub fn new(stochasticity: StochasticityConfig) -> Self {
        Self {
            layout_file: None,
            stochasticity,
            max_episode_steps: default_max_steps(),
            discount: default_maze_discount(),
        }
    }

    pub fn spec(&self) -> Result<MazeSpec> {
        let layout = match &self.layout_file {
            Some(path) => MazeLayout::load(path)?,
            None => MazeLayout::default_layout(),
        };
        let spec = MazeSpec {
            layout,
            stochasticity: self.stochasticity.into(),
            max_episode_steps: self.max_episode_steps,
            discount: self.discount,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StochasticityConfig {
    Deterministic,
    StochasticDynamics(f64),
    StochasticReward(f64),
}

impl From<StochasticityConfig> for Stochasticity {
    fn from(s: StochasticityConfig) -> Self {
        match s {
            StochasticityConfig::Deterministic => Stochasticity::Deterministic,
            StochasticityConfig::StochasticDynamics(p) => Stochasticity::StochasticDynamics(p),
            StochasticityConfig::StochasticReward(p) => Stochasticity::StochasticReward(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ramp {
    pub start: f64,
    pub end: f64,
}

impl Ramp {
    pub fn constant(value: f64) -> Self {
        Self {
            start: value,
            end: value,
        }
    }

    pub fn to_zero(start: f64) -> Self {
        Self { start, end: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clock {
    PerStep,
    PerEpisode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub alpha: Ramp,
    pub model_alpha: Ramp,
    pub epsilon: Ramp,
    pub clock: Clock,
    /// Ticks over which the ramps run; the experiment horizon when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_horizon: Option<u64>,
}

impl ScheduleConfig {
    pub fn schedules(&self, horizon: u64) -> Schedules {
        let h = self.decay_horizon.unwrap_or(horizon);
        let ramp = |r: Ramp| LinearSchedule::new(r.start, r.end, h);
        Schedules {
            alpha: ramp(self.alpha),
            model_alpha: ramp(self.model_alpha),
            epsilon: ramp(self.epsilon),
            clock: match self.clock {
                Clock::PerStep => DecayClock::PerStep,
                Clock::PerEpisode => DecayClock::PerEpisode,
            },
        }
    }

    /// All rates start at `alpha`/`model_alpha` and decay to zero; epsilon
    /// falls from 0.5 to 0. Decay is counted in episodes.
    pub fn control(alpha: f64, model_alpha: f64) -> Self {
        Self {
            alpha: Ramp::to_zero(alpha),
            model_alpha: Ramp::to_zero(model_alpha),
            epsilon: Ramp::to_zero(0.5),
            clock: Clock::PerEpisode,
            decay_horizon: None,
        }
    }

    /// Unit rates decayed to zero over the interactions.
    pub fn prediction() -> Self {
        Self {
            alpha: Ramp::to_zero(1.0),
            model_alpha: Ramp::to_zero(1.0),
            epsilon: Ramp::constant(0.0),
            clock: Clock::PerStep,
            decay_horizon: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    Learned,
    True,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionConfig {
    Forward,
    Backward,
}

impl From<DirectionConfig> for Direction {
    fn from(d: DirectionConfig) -> Self {
        match d {
            DirectionConfig::Forward => Direction::Forward,
            DirectionConfig::Backward => Direction::Backward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameConfig {
    PreviousState,
    CurrentState,
}

impl From<FrameConfig> for ReferenceFrame {
    fn from(f: FrameConfig) -> Self {
        match f {
            FrameConfig::PreviousState => ReferenceFrame::PreviousState,
            FrameConfig::CurrentState => ReferenceFrame::CurrentState,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerSpec {
    pub model: ModelSource,
    pub direction: DirectionConfig,
    pub reference: FrameConfig,
    #[serde(default = "default_planning_steps")]
    pub steps_per_interaction: u32,
}

fn default_planning_steps() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantConfig {
    pub name: String,
    #[serde(default = "default_true")]
    pub model_free_learning_enabled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planner: Option<PlannerSpec>,
}

fn default_true() -> bool {
    true
}

impl VariantConfig {
    pub fn model_free(name: &str) -> Self {
        Self {
            name: name.into(),
            model_free_learning_enabled: true,
            planner: None,
        }
    }

    pub fn planning(
        name: &str,
        model: ModelSource,
        direction: DirectionConfig,
        reference: FrameConfig,
        learning: bool,
    ) -> Self {
        Self {
            name: name.into(),
            model_free_learning_enabled: learning,
            planner: Some(PlannerSpec {
                model,
                direction,
                reference,
                steps_per_interaction: 1,
            }),
        }
    }
}

fn config_error<T>(msg: impl Into<String>) -> Result<T> {
    Err(HarnessError::Config(msg.into()))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return config_error("seed list is empty");
        }
        if self.horizon == 0 {
            return config_error("horizon must be positive");
        }
        if self.settings.is_empty() || self.variants.is_empty() {
            return config_error("need at least one setting and one variant");
        }
        let mut labels: Vec<&str> = self.settings.iter().map(|s| s.label.as_str()).collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != self.settings.len() {
            return config_error("setting labels must be unique");
        }
        let mut names: Vec<&str> = self.variants.iter().map(|v| v.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.variants.len() {
            return config_error("variant names must be unique");
        }
        for label in &labels {
            if label.is_empty()
                || !label
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
            {
                return config_error(format!("setting label {label:?} is not a safe file stem"));
            }
        }
        for setting in &self.settings {
            match (&setting.environment, self.kind.is_prediction()) {
                (EnvironmentConfig::LeveledChain(c), true) => c.spec(0).validate()?,
                (EnvironmentConfig::Maze(m), false) => {
                    m.spec()?;
                }
                _ => {
                    return config_error(format!(
                        "setting {} has an environment that does not fit {:?}",
                        setting.label, self.kind
                    ))
                }
            }
            let s = setting.schedules;
            for r in [s.alpha, s.model_alpha, s.epsilon] {
                if !(r.start.is_finite() && r.end.is_finite()) {
                    return config_error("schedule values must be finite");
                }
            }
            if s.alpha.start <= 0.0 {
                return config_error("step size must start positive");
            }
            if !(0.0..=1.0).contains(&s.epsilon.start) || !(0.0..=1.0).contains(&s.epsilon.end) {
                return config_error("epsilon must lie in [0, 1]");
            }
        }
        for v in &self.variants {
            match v.planner {
                None if !v.model_free_learning_enabled => {
                    return config_error(format!("variant {} neither learns nor plans", v.name))
                }
                Some(p) if p.steps_per_interaction == 0 && !v.model_free_learning_enabled => {
                    return config_error(format!("variant {} neither learns nor plans", v.name))
                }
                Some(PlannerSpec {
                    model: ModelSource::True,
                    direction: DirectionConfig::Backward,
                    ..
                }) if !self.kind.is_prediction() => {
                    return config_error(format!(
                        "variant {}: a true backward model depends on the changing policy and is unavailable for control",
                        v.name
                    ))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        let bytes = serde_json::to_vec(&canonical).expect("configuration serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn default_for(kind: ExperimentKind, scale: Scale) -> Self {
        let full = scale == Scale::Full;
        let seeds: Vec<u64> = (0..20).collect();
        let chain_setting = |label: &str, levels: Vec<usize>| SettingConfig {
            label: label.into(),
            environment: EnvironmentConfig::LeveledChain(ChainConfig::new(levels)),
            schedules: ScheduleConfig::prediction(),
        };
        let maze_setting =
            |label: &str, st: StochasticityConfig, alpha: f64, model_alpha: f64| SettingConfig {
                label: label.into(),
                environment: EnvironmentConfig::Maze(MazeConfig::new(st)),
                schedules: ScheduleConfig::control(alpha, model_alpha),
            };
        let interactions = if full { 2000 } else { 400 };
        let episodes = if full { 300 } else { 100 };
        match kind {
            ExperimentKind::PredictChain => Self {
                kind,
                settings: if full {
                    vec![
                        chain_setting("channeling", vec![500, 50, 5]),
                        chain_setting("broadcasting", vec![5, 50, 500]),
                    ]
                } else {
                    vec![
                        chain_setting("channeling", vec![100, 20, 5]),
                        chain_setting("broadcasting", vec![5, 20, 100]),
                    ]
                },
                variants: prediction_variants(),
                seeds,
                horizon: interactions,
                output_dir: None,
            },
            ExperimentKind::SweepFanRatio => {
                let big = if full { 500 } else { 100 };
                let mid = if full { 50 } else { 20 };
                let shapes = [(big, 5), (mid, 5), (5, 5), (5, mid), (5, big)];
                Self {
                    kind,
                    settings: shapes
                        .iter()
                        .map(|&(x, y)| chain_setting(&format!("fan_{x}_{y}"), vec![x, y]))
                        .collect(),
                    variants: prediction_variants(),
                    seeds,
                    horizon: interactions,
                    output_dir: None,
                }
            }
            ExperimentKind::ControlMaze => Self {
                kind,
                settings: vec![maze_setting(
                    "deterministic",
                    StochasticityConfig::Deterministic,
                    1.0,
                    1.0,
                )],
                variants: vec![
                    VariantConfig::model_free("q_learning"),
                    VariantConfig::planning(
                        "forward_dyna",
                        ModelSource::Learned,
                        DirectionConfig::Forward,
                        FrameConfig::CurrentState,
                        true,
                    ),
                    VariantConfig::planning(
                        "backward_dyna",
                        ModelSource::Learned,
                        DirectionConfig::Backward,
                        FrameConfig::PreviousState,
                        true,
                    ),
                ],
                seeds,
                horizon: episodes,
                output_dir: None,
            },
            ExperimentKind::ReferenceFrameAblation => {
                let mut variants = Vec::new();
                for (mode, learning) in [("full", true), ("pure", false)] {
                    for (dir, d) in [
                        ("backward", DirectionConfig::Backward),
                        ("forward", DirectionConfig::Forward),
                    ] {
                        for (frame, f) in [
                            ("s", FrameConfig::PreviousState),
                            ("s_next", FrameConfig::CurrentState),
                        ] {
                            variants.push(VariantConfig::planning(
                                &format!("{mode}_{dir}_from_{frame}"),
                                ModelSource::Learned,
                                d,
                                f,
                                learning,
                            ));
                        }
                    }
                }
                Self {
                    kind,
                    settings: vec![maze_setting(
                        "deterministic",
                        StochasticityConfig::Deterministic,
                        1.0,
                        1.0,
                    )],
                    variants,
                    seeds,
                    horizon: episodes,
                    output_dir: None,
                }
            }
            ExperimentKind::StochasticityAblation => Self {
                kind,
                settings: vec![
                    maze_setting(
                        "deterministic",
                        StochasticityConfig::Deterministic,
                        1.0,
                        1.0,
                    ),
                    maze_setting(
                        "stochastic_reward_0.5",
                        StochasticityConfig::StochasticReward(0.5),
                        0.1,
                        0.5,
                    ),
                    maze_setting(
                        "stochastic_reward_0.1",
                        StochasticityConfig::StochasticReward(0.1),
                        0.05,
                        0.05,
                    ),
                    maze_setting(
                        "stochastic_dynamics_0.5",
                        StochasticityConfig::StochasticDynamics(0.5),
                        0.1,
                        0.5,
                    ),
                ],
                variants: vec![
                    VariantConfig::model_free("q_learning"),
                    VariantConfig::planning(
                        "forward_dyna",
                        ModelSource::Learned,
                        DirectionConfig::Forward,
                        FrameConfig::CurrentState,
                        true,
                    ),
                    VariantConfig::planning(
                        "forward_dyna_true_model",
                        ModelSource::True,
                        DirectionConfig::Forward,
                        FrameConfig::CurrentState,
                        true,
                    ),
                    VariantConfig::planning(
                        "backward_dyna",
                        ModelSource::Learned,
                        DirectionConfig::Backward,
                        FrameConfig::PreviousState,
                        true,
                    ),
                ],
                seeds,
                horizon: episodes,
                output_dir: None,
            },
        }
    }
}

fn prediction_variants() -> Vec<VariantConfig> {
    use DirectionConfig::*;
    use FrameConfig::*;
    vec![
        VariantConfig::planning(
            "forward_true",
            ModelSource::True,
            Forward,
            PreviousState,
            true,
        ),
        VariantConfig::planning(
            "backward_true",
            ModelSource::True,
            Backward,
            CurrentState,
            true,
        ),
        VariantConfig::planning(
            "forward_learned",
            ModelSource::Learned,
            Forward,
            PreviousState,
            true,
        ),
        VariantConfig::planning(
            "backward_learned",
            ModelSource::Learned,
            Backward,
            CurrentState,
            true,
        ),
    ]
}

/// Parses `--seeds`: a count `n` meaning `0..n`, or a comma-separated list.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = || HarnessError::Config(format!("cannot parse seeds {text:?}"));
    if text.contains(',') {
        text.split(',')
            .map(|t| t.trim().parse::<u64>().map_err(|_| bad()))
            .collect()
    } else {
        let n: u64 = text.trim().parse().map_err(|_| bad())?;
        if n == 0 {
            return Err(bad());
        }
        Ok((0..n).collect())
    }
}
