use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{random_solution, EvaluatedCandidate, Incumbent, LoopConfig, OptimizeError, Problem, Scorer, TrialReport, TrialSeed};
use crate::evaluator::Evaluator;
use crate::lattice::SolutionVector;
use crate::llm::{CandidateGenerator, GenerationRecord, GenerationRequest, RecordSink};
use crate::prompt::{build_meta_prompt, parse_response, PromptStrategy, SolutionArchive};

/// Prompt-driven iterative refinement.
///
/// The archive is seeded with random evaluated solutions. Each step renders
/// the meta-prompt, asks the generator for a batch, parses and evaluates the
/// candidates, and folds them back into the archive. The loop ends when the
/// best score reaches `target_stop`, after `max_steps` model calls, or (with
/// `plateau_stop`) once the batch maximum improves by less than
/// `epsilon_converge` over the previous batch.
#[allow(clippy::too_many_arguments)]
pub fn run_opro(
    problem: &Problem,
    strategy: PromptStrategy,
    generator: &mut dyn CandidateGenerator,
    evaluator: &dyn Evaluator,
    cfg: &LoopConfig,
    id: TrialSeed,
    sink: &mut dyn RecordSink,
) -> Result<TrialReport, OptimizeError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(id.seed);
    let initial: Vec<_> = (0..cfg.initial_solutions)
        .map(|_| random_solution(&problem.grid, &mut rng))
        .collect();
    run_opro_from(problem, strategy, generator, evaluator, cfg, id, sink, initial)
}

/// Same as [`run_opro`] but seeding the archive with caller-supplied designs.
#[allow(clippy::too_many_arguments)]
pub fn run_opro_from(
    problem: &Problem,
    strategy: PromptStrategy,
    generator: &mut dyn CandidateGenerator,
    evaluator: &dyn Evaluator,
    cfg: &LoopConfig,
    id: TrialSeed,
    sink: &mut dyn RecordSink,
    initial: Vec<SolutionVector>,
) -> Result<TrialReport, OptimizeError> {
    cfg.validate()?;
    if initial.is_empty() {
        return Err(OptimizeError::InvalidConfig("no initial solutions".into()));
    }
    let mut scorer = Scorer::new(evaluator, problem.scoring, cfg.cache);
    let mut archive = SolutionArchive::new(cfg.archive_capacity);
    let mut incumbent = Incumbent::new();

    let results = scorer.score_batch(&initial)?;
    for (sol, r) in initial.iter().zip(&results) {
        archive.insert(*sol, *r);
        incumbent.offer(sol, r);
    }
    incumbent.mark();
    let mut prev_batch_max = results.iter().map(|r| r.score).reduce(f64::max);

    for step in 0..cfg.max_steps {
        if incumbent.best_score() >= cfg.target_stop {
            break;
        }
        let prompt = build_meta_prompt(strategy, &archive, cfg.batch_size, &problem.map)?;
        let generation = generator.generate(&GenerationRequest {
            step,
            prompt: &prompt,
            archive: &archive,
            grid: &problem.grid,
        })?;
        sink.append(&GenerationRecord {
            trial: Some(id.trial),
            step,
            prompt: prompt.text,
            response: generation.text.clone(),
            latency_secs: generation.latency_secs,
            prompt_tokens: generation.prompt_tokens,
            completion_tokens: generation.completion_tokens,
        })?;

        let parsed = parse_response(&generation.text, &problem.grid, cfg.parse_mode);
        if parsed.candidates.is_empty() {
            log::info!("trial {} step {step}: no parsable candidates ({} rejects)", id.trial, parsed.rejects.len());
        }
        let results = scorer.score_batch(&parsed.candidates)?;
        let mut evaluated = Vec::with_capacity(results.len());
        for (sol, r) in parsed.candidates.iter().zip(&results) {
            archive.insert(*sol, *r);
            incumbent.offer(sol, r);
            evaluated.push(EvaluatedCandidate::new(sol, r));
        }
        incumbent.record_step(step, evaluated, parsed.rejects.len());

        let batch_max = results.iter().map(|r| r.score).reduce(f64::max);
        if cfg.plateau_stop {
            if let (Some(cur), Some(prev)) = (batch_max, prev_batch_max) {
                if cur - prev < cfg.epsilon_converge {
                    break;
                }
            }
        }
        if batch_max.is_some() {
            prev_batch_max = batch_max;
        }
    }

    let mut report = incumbent.finish(id, "opro", scorer.evaluations())?;
    report.strategy = Some(strategy);
    Ok(report)
}
