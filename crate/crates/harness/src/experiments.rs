//! Runs every (setting, variant, seed) job of a configuration.

use crate::config::{
    EnvironmentConfig, ExperimentConfig, ModelSource, SettingConfig, VariantConfig,
};
use crate::error::{HarnessError, Result};
use crate::metrics::{normalize_aucs, CurveStats};
use rayon::prelude::*;
use retroplan_core::envs::{build_leveled_chain, build_maze, ChainEnv, MazeEnv, MazeSpec};
use retroplan_core::planning::{
    run_control_observed, run_prediction, Direction, Planner, PlannerConfig, TrueBackwardModel,
    TrueForwardModel,
};
use retroplan_core::{exact_value, TabularChain};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    /// Value error after every interaction.
    Rmsve,
    /// Steps to goal of every episode.
    Steps,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    pub curve: Vec<f64>,
    /// Discounted episode returns; empty for prediction.
    pub returns: Vec<f64>,
    /// First episode (1-based) after which the greedy path was optimal.
    pub first_optimal_episode: Option<u64>,
    /// Greedy path length after the last episode.
    pub final_greedy_path: Option<usize>,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantRuns {
    pub name: String,
    pub runs: Vec<SeedRun>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SettingRuns {
    pub label: String,
    pub metric: MetricKind,
    /// Shortest start-to-goal path of the maze.
    pub optimal_path: Option<usize>,
    pub variants: Vec<VariantRuns>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub settings: Vec<SettingRuns>,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub variant: String,
    pub auc: f64,
    pub auc_normalized: f64,
    pub final_mean: f64,
    pub final_stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SettingSummary {
    pub label: String,
    pub rows: Vec<SummaryRow>,
    pub stats: Vec<CurveStats>,
}

impl SettingSummary {
    pub fn row(&self, variant: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.variant == variant)
    }
}

impl SettingRuns {
    pub fn variant(&self, name: &str) -> Option<&VariantRuns> {
        self.variants.iter().find(|v| v.name == name)
    }

    pub fn summarize(&self) -> Result<SettingSummary> {
        let stats = self
            .variants
            .iter()
            .map(|v| {
                CurveStats::from_curves(&v.runs.iter().map(|r| r.curve.clone()).collect::<Vec<_>>())
            })
            .collect::<Result<Vec<_>>>()?;
        let aucs: Vec<f64> = stats.iter().map(CurveStats::auc).collect();
        let normalized = normalize_aucs(&aucs);
        let rows = self
            .variants
            .iter()
            .zip(&stats)
            .zip(aucs.iter().zip(&normalized))
            .map(|((v, s), (&auc, &auc_normalized))| SummaryRow {
                variant: v.name.clone(),
                auc,
                auc_normalized,
                final_mean: s.mean.last().copied().unwrap_or(f64::NAN),
                final_stderr: s.stderr.last().copied().unwrap_or(0.0),
            })
            .collect();
        Ok(SettingSummary {
            label: self.label.clone(),
            rows,
            stats,
        })
    }
}

impl ExperimentResult {
    pub fn setting(&self, label: &str) -> Option<&SettingRuns> {
        self.settings.iter().find(|s| s.label == label)
    }
}

/// Built environment shared by every job of a setting.
enum Prepared {
    Chain,
    Maze(MazeSpec, Option<usize>),
}

fn prepare(setting: &SettingConfig) -> Result<Prepared> {
    Ok(match &setting.environment {
        EnvironmentConfig::LeveledChain(_) => Prepared::Chain,
        EnvironmentConfig::Maze(m) => {
            let spec = m.spec()?;
            let optimum = spec.layout.shortest_path_length();
            Prepared::Maze(spec, optimum)
        }
    })
}

fn planner_config(variant: &VariantConfig) -> PlannerConfig {
    match variant.planner {
        Some(p) => PlannerConfig {
            direction: p.direction.into(),
            reference: p.reference.into(),
            steps_per_interaction: p.steps_per_interaction as usize,
            model_free_learning_enabled: variant.model_free_learning_enabled,
        },
        None => PlannerConfig {
            steps_per_interaction: 0,
            model_free_learning_enabled: variant.model_free_learning_enabled,
            ..PlannerConfig::model_free()
        },
    }
}

fn chain_planner(variant: &VariantConfig, chain: &TabularChain) -> Result<Option<Planner>> {
    let Some(p) = variant.planner else {
        return Ok(None);
    };
    let direction: Direction = p.direction.into();
    Ok(Some(match (p.model, direction) {
        (ModelSource::Learned, d) => Planner::learned(d, chain.n_states(), 1, chain.discount())?,
        (ModelSource::True, Direction::Forward) => {
            Planner::TrueForward(TrueForwardModel::from_chain(chain))
        }
        (ModelSource::True, Direction::Backward) => {
            Planner::TrueBackward(TrueBackwardModel::from_chain(chain)?)
        }
    }))
}

fn maze_planner(variant: &VariantConfig, spec: &MazeSpec) -> Result<Option<Planner>> {
    let Some(p) = variant.planner else {
        return Ok(None);
    };
    let direction: Direction = p.direction.into();
    let n = spec.layout.n_states();
    Ok(Some(match (p.model, direction) {
        (ModelSource::Learned, d) => Planner::learned(d, n, 4, spec.discount)?,
        (ModelSource::True, Direction::Forward) => {
            Planner::TrueForward(TrueForwardModel::from_mdp(&build_maze(spec)?))
        }
        (ModelSource::True, Direction::Backward) => {
            return Err(HarnessError::Config(format!(
                "variant {}: no true backward model for control",
                variant.name
            )))
        }
    }))
}

fn run_job(
    setting: &SettingConfig,
    prepared: &Prepared,
    variant: &VariantConfig,
    seed: u64,
    horizon: u64,
) -> Result<SeedRun> {
    let clock = Instant::now();
    let schedules = setting.schedules.schedules(horizon);
    let config = planner_config(variant);
    let mut run = match (&setting.environment, prepared) {
        (EnvironmentConfig::LeveledChain(c), _) => {
            let chain = build_leveled_chain(&c.spec(seed))?;
            let exact = exact_value(&chain)?;
            let planner = chain_planner(variant, &chain)?;
            let mut env = ChainEnv::new(chain);
            let out = run_prediction(&mut env, &config, planner, &schedules, horizon, seed, |v| {
                crate::metrics::rmsve(v.as_slice(), exact.as_slice()).unwrap_or(f64::NAN)
            })?;
            SeedRun {
                seed,
                curve: out.curve,
                returns: Vec::new(),
                first_optimal_episode: None,
                final_greedy_path: None,
                wall_time: 0.0,
            }
        }
        (EnvironmentConfig::Maze(_), Prepared::Maze(spec, optimum)) => {
            let planner = maze_planner(variant, spec)?;
            let mut env = MazeEnv::new(spec.clone())?;
            let max_steps = spec.max_episode_steps;
            let mut first = None;
            let out = run_control_observed(
                &mut env,
                &config,
                planner,
                &schedules,
                horizon,
                seed,
                |e, q| {
                    if first.is_none()
                        && optimum.is_some()
                        && spec.layout.greedy_path_length(q, max_steps) == *optimum
                    {
                        first = Some(e + 1);
                    }
                },
            )?;
            SeedRun {
                seed,
                curve: out.steps.iter().map(|&n| n as f64).collect(),
                returns: out.returns,
                first_optimal_episode: first,
                final_greedy_path: spec.layout.greedy_path_length(&out.q, max_steps),
                wall_time: 0.0,
            }
        }
        (EnvironmentConfig::Maze(_), Prepared::Chain) => {
            unreachable!("prepared from the same setting")
        }
    };
    if let Some(bad) = run
        .curve
        .iter()
        .chain(&run.returns)
        .find(|x| !x.is_finite())
    {
        return Err(HarnessError::Numerical(format!(
            "setting {} variant {} seed {seed}: non-finite metric {bad}",
            setting.label, variant.name
        )));
    }
    run.wall_time = clock.elapsed().as_secs_f64();
    Ok(run)
}

/// Runs all jobs on `threads` workers (0 picks the machine default). Results
/// are merged in configuration order, so output never depends on scheduling.
pub fn run_experiment(config: &ExperimentConfig, threads: usize) -> Result<ExperimentResult> {
    config.validate()?;
    let clock = Instant::now();
    let prepared = config
        .settings
        .iter()
        .map(prepare)
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize, u64)> = (0..config.settings.len())
        .flat_map(|s| {
            (0..config.variants.len())
                .flat_map(move |v| config.seeds.iter().map(move |&seed| (s, v, seed)))
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    let runs: Vec<SeedRun> = pool.install(|| {
        jobs.par_iter()
            .map(|&(s, v, seed)| {
                run_job(
                    &config.settings[s],
                    &prepared[s],
                    &config.variants[v],
                    seed,
                    config.horizon,
                )
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut runs = runs.into_iter();
    let settings = config
        .settings
        .iter()
        .zip(&prepared)
        .map(|(setting, prep)| SettingRuns {
            label: setting.label.clone(),
            metric: if config.kind.is_prediction() {
                MetricKind::Rmsve
            } else {
                MetricKind::Steps
            },
            optimal_path: match prep {
                Prepared::Maze(_, optimum) => *optimum,
                Prepared::Chain => None,
            },
            variants: config
                .variants
                .iter()
                .map(|v| VariantRuns {
                    name: v.name.clone(),
                    runs: runs.by_ref().take(config.seeds.len()).collect(),
                })
                .collect(),
        })
        .collect();
    Ok(ExperimentResult {
        config: config.clone(),
        config_hash: config.hash(),
        settings,
        wall_time: clock.elapsed().as_secs_f64(),
    })
}
