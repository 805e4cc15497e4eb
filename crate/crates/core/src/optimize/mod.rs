//! Optimization engines sharing one evaluation and scoring stack: the
//! prompt-driven refinement loop, a generational GA, and a random baseline.

mod ga;
mod opro;
mod random;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluator::{CachedEvaluator, EvalError, Evaluator};
use crate::lattice::{LatticeMap, ParameterGrid, SolutionVector, N_PARAMS};
use crate::llm::GenerationError;
use crate::objective::{EvaluationResult, ScoreConfig, ScoreError};
use crate::prompt::{ParseMode, PromptError, PromptStrategy, DEFAULT_CAPACITY};

pub use ga::{run_ga, run_ga_from};
pub use opro::{run_opro, run_opro_from};
pub use random::run_random_baseline;

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("candidate generation failed: {0}")]
    GenerationFailed(#[from] GenerationError),
    #[error("evaluation failed: {0}")]
    EvaluationError(#[from] EvalError),
    #[error("scoring failed: {0}")]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("run log error: {0}")]
    Io(#[from] std::io::Error),
}

/// Problem definition shared by every engine.
#[derive(Debug, Clone, Default)]
pub struct Problem {
    pub grid: ParameterGrid,
    pub map: LatticeMap,
    pub scoring: ScoreConfig,
}

/// Identity of one trial; the seed drives every random choice in it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrialSeed {
    pub trial: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoopConfig {
    /// Candidates requested per model call.
    pub batch_size: usize,
    /// Maximum number of model calls.
    pub max_steps: usize,
    /// Plateau threshold on consecutive batch maxima.
    pub epsilon_converge: f64,
    pub plateau_stop: bool,
    /// Stop once the best score reaches this value.
    pub target_stop: f64,
    /// Random grid-valid solutions seeding the archive.
    pub initial_solutions: usize,
    pub archive_capacity: usize,
    pub parse_mode: ParseMode,
    pub cache: bool,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            batch_size: 5,
            max_steps: 60,
            epsilon_converge: 1e-6,
            plateau_stop: false,
            target_stop: 100.0 - 1e-9,
            initial_solutions: 3,
            archive_capacity: DEFAULT_CAPACITY,
            parse_mode: ParseMode::SnapToGrid,
            cache: true,
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        if self.batch_size == 0 || self.max_steps == 0 {
            return Err(OptimizeError::InvalidConfig("batch_size and max_steps must be >= 1".into()));
        }
        if self.initial_solutions == 0 || self.archive_capacity == 0 {
            return Err(OptimizeError::InvalidConfig(
                "initial_solutions and archive_capacity must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub tournament_k: usize,
    pub crossover_rate: f64,
    /// Per-gene probability of a one-step move.
    pub mutation_rate: f64,
    pub elitism: usize,
    pub target_stop: f64,
    pub cache: bool,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 20,
            generations: 50,
            tournament_k: 3,
            crossover_rate: 0.9,
            mutation_rate: 1.0 / N_PARAMS as f64,
            elitism: 2,
            target_stop: 100.0 - 1e-9,
            cache: true,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        let rates = (0.0..=1.0).contains(&self.crossover_rate) && (0.0..=1.0).contains(&self.mutation_rate);
        if self.population < 2 || self.elitism >= self.population || self.tournament_k == 0 || !rates {
            return Err(OptimizeError::InvalidConfig(format!("{self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedCandidate {
    pub solution: String,
    pub kinf: f64,
    pub ppf: f64,
    pub score: f64,
}

impl EvaluatedCandidate {
    fn new(sol: &SolutionVector, r: &EvaluationResult) -> Self {
        Self {
            solution: sol.serialize(),
            kinf: r.kinf,
            ppf: r.ppf,
            score: r.score,
        }
    }
}

/// Everything that happened in one engine step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub step: usize,
    pub candidates: Vec<EvaluatedCandidate>,
    pub best_so_far: f64,
    pub rejects: usize,
}

/// Result of one optimization trial.
///
/// `progression[0]` is the best score after initialization (initial archive,
/// initial population, or first random draw); entry `s` is the best after
/// step `s`. `steps_to_best` is the first index holding the final best.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trial: usize,
    pub seed: u64,
    pub engine: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<PromptStrategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<String>,
    pub best_solution: String,
    pub best_kinf: f64,
    pub best_ppf: f64,
    pub best_score: f64,
    pub steps_to_best: usize,
    pub total_steps: usize,
    pub total_evaluations: usize,
    pub progression: Vec<f64>,
    pub reject_counts: Vec<usize>,
    pub steps: Vec<StepOutcome>,
}

impl TrialReport {
    /// Row label used when aggregating: engine, backend, strategy.
    pub fn label(&self) -> String {
        match (&self.backend, self.strategy) {
            (Some(b), Some(s)) => format!("{} ({b}, {s})", self.engine),
            (Some(b), None) => format!("{} ({b})", self.engine),
            (None, Some(s)) => format!("{} ({s})", self.engine),
            (None, None) => self.engine.clone(),
        }
    }
}

/// First index at which `progression` reaches its final value.
pub fn steps_to_best(progression: &[f64]) -> usize {
    let Some(&last) = progression.last() else {
        return 0;
    };
    progression.iter().position(|&v| v == last).unwrap_or(0)
}

pub fn random_solution<R: Rng + ?Sized>(grid: &ParameterGrid, rng: &mut R) -> SolutionVector {
    let idx: [i64; N_PARAMS] = std::array::from_fn(|slot| {
        let ax = grid.slot_axis(slot);
        rng.gen_range(ax.lo..=ax.hi)
    });
    SolutionVector::from_indices(&idx, grid)
}

/// Evaluator plus scoring, with optional per-run memoization.
pub(crate) struct Scorer<'a> {
    evaluator: Box<dyn Evaluator + 'a>,
    scoring: ScoreConfig,
    evaluations: usize,
}

impl<'a> Scorer<'a> {
    pub(crate) fn new(evaluator: &'a dyn Evaluator, scoring: ScoreConfig, cache: bool) -> Self {
        let evaluator: Box<dyn Evaluator + 'a> = if cache {
            Box::new(CachedEvaluator::new(evaluator))
        } else {
            Box::new(evaluator)
        };
        Self {
            evaluator,
            scoring,
            evaluations: 0,
        }
    }

    pub(crate) fn evaluations(&self) -> usize {
        self.evaluations
    }

    /// Results in candidate order; pure evaluators run in parallel.
    pub(crate) fn score_batch(&mut self, sols: &[SolutionVector]) -> Result<Vec<EvaluationResult>, OptimizeError> {
        let ev = &self.evaluator;
        let scoring = &self.scoring;
        let one = |s: &SolutionVector| -> Result<EvaluationResult, OptimizeError> {
            let r = ev.evaluate(s)?;
            Ok(EvaluationResult::new(r.kinf, r.ppf, scoring)?)
        };
        let results: Result<Vec<_>, _> = if ev.is_pure() && sols.len() > 1 {
            sols.par_iter().map(one).collect()
        } else {
            sols.iter().map(one).collect()
        };
        self.evaluations += sols.len();
        results
    }
}

/// Tracks the incumbent and assembles the final report.
pub(crate) struct Incumbent {
    best: Option<(SolutionVector, EvaluationResult)>,
    progression: Vec<f64>,
    steps: Vec<StepOutcome>,
    rejects: Vec<usize>,
}

impl Incumbent {
    pub(crate) fn new() -> Self {
        Self {
            best: None,
            progression: Vec::new(),
            steps: Vec::new(),
            rejects: Vec::new(),
        }
    }

    pub(crate) fn offer(&mut self, sol: &SolutionVector, r: &EvaluationResult) {
        if self.best.is_none_or(|(_, b)| r.score > b.score) {
            self.best = Some((*sol, *r));
        }
    }

    pub(crate) fn best_score(&self) -> f64 {
        self.best.map_or(f64::NEG_INFINITY, |(_, r)| r.score)
    }

    pub(crate) fn mark(&mut self) {
        self.progression.push(self.best_score());
    }

    pub(crate) fn record_step(&mut self, step: usize, candidates: Vec<EvaluatedCandidate>, rejects: usize) {
        self.mark();
        self.rejects.push(rejects);
        self.steps.push(StepOutcome {
            step,
            candidates,
            best_so_far: self.best_score(),
            rejects,
        });
    }

    pub(crate) fn finish(self, id: TrialSeed, engine: &str, evaluations: usize) -> Result<TrialReport, OptimizeError> {
        let (sol, r) = self
            .best
            .ok_or_else(|| OptimizeError::InvalidConfig("no solution was evaluated".into()))?;
        Ok(TrialReport {
            trial: id.trial,
            seed: id.seed,
            engine: engine.to_string(),
            strategy: None,
            backend: None,
            best_solution: sol.serialize(),
            best_kinf: r.kinf,
            best_ppf: r.ppf,
            best_score: r.score,
            steps_to_best: steps_to_best(&self.progression),
            total_steps: self.steps.len(),
            total_evaluations: evaluations,
            progression: self.progression,
            reject_counts: self.rejects,
            steps: self.steps,
        })
    }
}
