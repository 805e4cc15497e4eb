use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{random_solution, EvaluatedCandidate, Incumbent, OptimizeError, Problem, Scorer, TrialReport, TrialSeed};
use crate::evaluator::Evaluator;

/// Uniform random search; one evaluation per step.
pub fn run_random_baseline(
    problem: &Problem,
    evaluator: &dyn Evaluator,
    budget: usize,
    id: TrialSeed,
) -> Result<TrialReport, OptimizeError> {
    if budget == 0 {
        return Err(OptimizeError::InvalidConfig("random budget must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(id.seed);
    let mut scorer = Scorer::new(evaluator, problem.scoring, false);
    let mut incumbent = Incumbent::new();
    for step in 0..budget {
        let sol = random_solution(&problem.grid, &mut rng);
        let r = scorer.score_batch(std::slice::from_ref(&sol))?[0];
        incumbent.offer(&sol, &r);
        incumbent.record_step(step, vec![EvaluatedCandidate::new(&sol, &r)], 0);
    }
    incumbent.finish(id, "random", scorer.evaluations())
}
