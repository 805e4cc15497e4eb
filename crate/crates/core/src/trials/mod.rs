//! Multi-trial experiments: configuration, parallel execution, and the run
//! directory layout.
//!
//! A run directory contains `config.json`, `trials/trial_NNN.json`,
//! `runlog.jsonl`, `progression.csv`, `progression.svg` and `summary.md`.
//! Everything except `config.json` and `runlog.jsonl` can be regenerated from
//! the stored trial files with [`write_reports`].

mod report;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::evaluator::{EvalError, Evaluator, ExternalConfig, ExternalEvaluator, SurrogateConfig, SurrogateEvaluator};
use crate::lattice::{LatticeError, LatticeMap, ParameterGrid};
use crate::llm::{build_generator, Backend, GenerationError, GenerationRecord, GeneratorConfig, JsonlLog, RecordSink};
use crate::objective::{ScoreConfig, ScoreError};
use crate::optimize::{
    run_ga, run_opro, run_random_baseline, GaConfig, LoopConfig, OptimizeError, Problem, TrialReport, TrialSeed,
};
use crate::prompt::PromptStrategy;

pub use report::{
    emit_markdown_tables, emit_progression_chart, format_cell, progression_csv, progression_svg, summarize,
    SummaryStats,
};

#[derive(Debug, Error)]
pub enum TrialsError {
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("no trial reports found in {0}")]
    NoReports(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    #[default]
    Opro,
    Ga,
    Random,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Opro => "opro",
            Engine::Ga => "ga",
            Engine::Random => "random",
        })
    }
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "opro" => Ok(Engine::Opro),
            "ga" => Ok(Engine::Ga),
            "random" => Ok(Engine::Random),
            other => Err(format!("unknown engine {other:?} (expected opro, ga or random)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ProblemConfig {
    pub grid: ParameterGrid,
    /// Half-lattice map file; the built-in GE-14 map when absent.
    pub map_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvaluatorConfig {
    Surrogate(SurrogateConfig),
    External(ExternalConfig),
}

impl Default for EvaluatorConfig {
    fn default() -> Self {
        EvaluatorConfig::Surrogate(SurrogateConfig::default())
    }
}

/// Experiment definition, read from JSON. Missing fields take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub scoring: ScoreConfig,
    pub evaluator: EvaluatorConfig,
    pub generator: GeneratorConfig,
    pub engine: Engine,
    #[serde(rename = "loop")]
    pub loop_cfg: LoopConfig,
    pub ga: GaConfig,
    /// Evaluations per random-baseline trial.
    pub random_budget: usize,
    pub strategy: PromptStrategy,
    pub trials: usize,
    pub base_seed: u64,
    pub output_dir: PathBuf,
    /// Trials executed concurrently.
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: ProblemConfig::default(),
            scoring: ScoreConfig::default(),
            evaluator: EvaluatorConfig::default(),
            generator: GeneratorConfig::default(),
            engine: Engine::Opro,
            loop_cfg: LoopConfig::default(),
            ga: GaConfig::default(),
            random_budget: 300,
            strategy: PromptStrategy::DetailedContext,
            trials: 10,
            base_seed: 0,
            output_dir: PathBuf::from("runs"),
            jobs: 1,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, TrialsError> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<(), TrialsError> {
        let bad = |m: String| Err(TrialsError::InvalidConfig(m));
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if self.jobs == 0 {
            return bad("jobs must be >= 1".into());
        }
        self.problem.grid.validate()?;
        self.scoring.validate()?;
        if let Some(p) = &self.problem.map_path {
            if !p.exists() {
                return bad(format!("map file {} does not exist", p.display()));
            }
        }
        match &self.evaluator {
            EvaluatorConfig::Surrogate(c) => c.validate()?,
            EvaluatorConfig::External(c) => {
                if c.command.is_empty() {
                    return bad("external evaluator command is empty".into());
                }
            }
        }
        match self.engine {
            Engine::Opro => {
                self.loop_cfg.validate()?;
                self.generator.validate()?;
                if let (Backend::Replay, Some(p)) = (self.generator.backend, &self.generator.transcript) {
                    if !p.exists() {
                        return bad(format!("transcript {} does not exist", p.display()));
                    }
                }
            }
            Engine::Ga => self.ga.validate()?,
            Engine::Random => {
                if self.random_budget == 0 {
                    return bad("random_budget must be >= 1".into());
                }
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the configuration, ignoring where and how fast it runs.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        canonical.jobs = 1;
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// `<output_dir>/<engine>-<first 12 hash digits>`.
    pub fn run_dir(&self) -> PathBuf {
        self.output_dir.join(format!("{}-{}", self.engine, &self.hash()[..12]))
    }

    pub fn load_problem(&self) -> Result<Problem, TrialsError> {
        let map = match &self.problem.map_path {
            Some(p) => LatticeMap::from_file(p)?,
            None => LatticeMap::ge14(),
        };
        Ok(Problem {
            grid: self.problem.grid,
            map,
            scoring: self.scoring,
        })
    }

    pub fn build_evaluator(&self, map: &LatticeMap) -> Result<Arc<dyn Evaluator>, TrialsError> {
        Ok(match &self.evaluator {
            EvaluatorConfig::Surrogate(c) => Arc::new(SurrogateEvaluator::new(map.clone(), *c)?),
            EvaluatorConfig::External(c) => Arc::new(ExternalEvaluator::new(c.clone())?),
        })
    }
}

/// Stored form of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrialOutcome {
    Ok(TrialReport),
    Failed { trial: usize, seed: u64, label: String, error: String },
}

impl TrialOutcome {
    pub fn trial(&self) -> usize {
        match self {
            TrialOutcome::Ok(r) => r.trial,
            TrialOutcome::Failed { trial, .. } => *trial,
        }
    }

    pub fn report(&self) -> Option<&TrialReport> {
        match self {
            TrialOutcome::Ok(r) => Some(r),
            TrialOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub outcomes: Vec<TrialOutcome>,
    pub stats: Vec<SummaryStats>,
    pub summary: String,
}

/// Runs one trial of the configured engine.
pub fn run_single(
    cfg: &RunConfig,
    problem: &Problem,
    evaluator: &dyn Evaluator,
    id: TrialSeed,
    sink: &mut dyn RecordSink,
) -> Result<TrialReport, TrialsError> {
    Ok(match cfg.engine {
        Engine::Opro => {
            let mut generator = build_generator(&cfg.generator, id.seed)?;
            let mut report = run_opro(problem, cfg.strategy, generator.as_mut(), evaluator, &cfg.loop_cfg, id, sink)?;
            report.backend = Some(cfg.generator.backend.to_string());
            report
        }
        Engine::Ga => run_ga(problem, evaluator, &cfg.ga, id)?,
        Engine::Random => run_random_baseline(problem, evaluator, cfg.random_budget, id)?,
    })
}

fn run_label(cfg: &RunConfig) -> String {
    match cfg.engine {
        Engine::Opro => format!("opro ({}, {})", cfg.generator.backend, cfg.strategy),
        other => other.to_string(),
    }
}

/// Runs `cfg.trials` trials with seeds `base_seed..base_seed + trials` and
/// writes every artifact under [`RunConfig::run_dir`].
pub fn run_trials(cfg: &RunConfig) -> Result<RunOutcome, TrialsError> {
    cfg.validate()?;
    let problem = cfg.load_problem()?;
    let evaluator = cfg.build_evaluator(&problem.map)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| TrialsError::InvalidConfig(e.to_string()))?;

    let results: Vec<(TrialOutcome, Vec<GenerationRecord>)> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let id = TrialSeed {
                    trial,
                    seed: cfg.base_seed.wrapping_add(trial as u64),
                };
                let mut records = Vec::new();
                let outcome = match run_single(cfg, &problem, evaluator.as_ref(), id, &mut records) {
                    Ok(r) => TrialOutcome::Ok(r),
                    Err(e) => {
                        log::warn!("trial {trial} (seed {}) failed: {e}", id.seed);
                        TrialOutcome::Failed {
                            trial,
                            seed: id.seed,
                            label: run_label(cfg),
                            error: e.to_string(),
                        }
                    }
                };
                (outcome, records)
            })
            .collect()
    });

    let dir = cfg.run_dir();
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.json"), serde_json::to_string_pretty(cfg)? + "\n")?;
    let trials_dir = dir.join("trials");
    if trials_dir.exists() {
        fs::remove_dir_all(&trials_dir)?;
    }
    fs::create_dir_all(&trials_dir)?;
    let mut log = JsonlLog::create(&dir.join("runlog.jsonl"))?;
    let mut outcomes = Vec::with_capacity(results.len());
    for (outcome, records) in results {
        let path = trials_dir.join(format!("trial_{:03}.json", outcome.trial()));
        fs::write(path, serde_json::to_string_pretty(&outcome)? + "\n")?;
        for r in &records {
            log.append(r)?;
        }
        outcomes.push(outcome);
    }
    let (stats, summary) = write_reports(&dir, &outcomes)?;
    Ok(RunOutcome {
        dir,
        outcomes,
        stats,
        summary,
    })
}

/// Reads `trials/*.json` from a run directory, in trial order.
pub fn load_outcomes(dir: &Path) -> Result<Vec<TrialOutcome>, TrialsError> {
    let trials_dir = dir.join("trials");
    let mut paths: Vec<PathBuf> = fs::read_dir(&trials_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut outcomes = paths
        .iter()
        .map(|p| Ok(serde_json::from_str(&fs::read_to_string(p)?)?))
        .collect::<Result<Vec<TrialOutcome>, TrialsError>>()?;
    if outcomes.is_empty() {
        return Err(TrialsError::NoReports(trials_dir));
    }
    outcomes.sort_by_key(|o| o.trial());
    Ok(outcomes)
}

/// Writes `summary.md`, `progression.csv` and `progression.svg`; a pure
/// function of the trial outcomes.
pub fn write_reports(dir: &Path, outcomes: &[TrialOutcome]) -> Result<(Vec<SummaryStats>, String), TrialsError> {
    let stats = summarize(outcomes);
    let summary = emit_markdown_tables(&stats);
    fs::write(dir.join("summary.md"), &summary)?;
    let reports: Vec<TrialReport> = outcomes.iter().filter_map(|o| o.report().cloned()).collect();
    emit_progression_chart(&reports, dir)?;
    Ok((stats, summary))
}

/// Regenerates the reports of an existing run directory.
pub fn regenerate_reports(dir: &Path) -> Result<String, TrialsError> {
    let outcomes = load_outcomes(dir)?;
    Ok(write_reports(dir, &outcomes)?.1)
}
