use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{random_solution, EvaluatedCandidate, GaConfig, Incumbent, OptimizeError, Problem, Scorer, TrialReport, TrialSeed};
use crate::evaluator::Evaluator;
use crate::lattice::{ParameterGrid, SolutionVector, N_PARAMS};
use crate::objective::EvaluationResult;

#[derive(Debug, Clone, Copy)]
struct Individual {
    genes: [i64; N_PARAMS],
    result: EvaluationResult,
}

/// Generational GA over grid step indices, starting from a random population.
pub fn run_ga(
    problem: &Problem,
    evaluator: &dyn Evaluator,
    cfg: &GaConfig,
    id: TrialSeed,
) -> Result<TrialReport, OptimizeError> {
    let mut rng = ChaCha8Rng::seed_from_u64(id.seed);
    let initial = (0..cfg.population)
        .map(|_| random_solution(&problem.grid, &mut rng))
        .collect();
    evolve(problem, evaluator, cfg, id, initial, rng)
}

/// Same as [`run_ga`] but with a caller-supplied initial population.
pub fn run_ga_from(
    problem: &Problem,
    evaluator: &dyn Evaluator,
    cfg: &GaConfig,
    id: TrialSeed,
    initial: Vec<SolutionVector>,
) -> Result<TrialReport, OptimizeError> {
    if initial.len() != cfg.population {
        return Err(OptimizeError::InvalidConfig(format!(
            "initial population has {} members, expected {}",
            initial.len(),
            cfg.population
        )));
    }
    evolve(problem, evaluator, cfg, id, initial, ChaCha8Rng::seed_from_u64(id.seed))
}

fn evolve(
    problem: &Problem,
    evaluator: &dyn Evaluator,
    cfg: &GaConfig,
    id: TrialSeed,
    initial: Vec<SolutionVector>,
    mut rng: ChaCha8Rng,
) -> Result<TrialReport, OptimizeError> {
    cfg.validate()?;
    let grid = &problem.grid;
    let mut scorer = Scorer::new(evaluator, problem.scoring, cfg.cache);
    let mut incumbent = Incumbent::new();

    let results = scorer.score_batch(&initial)?;
    let mut population: Vec<Individual> = initial
        .iter()
        .zip(results)
        .map(|(s, r)| {
            incumbent.offer(s, &r);
            Individual {
                genes: s.to_indices(grid),
                result: r,
            }
        })
        .collect();
    incumbent.mark();

    for generation in 0..cfg.generations {
        if incumbent.best_score() >= cfg.target_stop {
            break;
        }
        let mut ranked = population.clone();
        // Stable: ties keep population order.
        ranked.sort_by(|a, b| b.result.score.total_cmp(&a.result.score));
        let elites = &ranked[..cfg.elitism];

        let children: Vec<[i64; N_PARAMS]> = (0..cfg.population - cfg.elitism)
            .map(|_| {
                let a = tournament(&population, cfg.tournament_k, &mut rng);
                let b = tournament(&population, cfg.tournament_k, &mut rng);
                let mut child = if rng.gen_bool(cfg.crossover_rate) {
                    uniform_crossover(&a.genes, &b.genes, &mut rng)
                } else {
                    a.genes
                };
                mutate(&mut child, grid, cfg.mutation_rate, &mut rng);
                child
            })
            .collect();
        let sols: Vec<SolutionVector> = children
            .iter()
            .map(|g| SolutionVector::from_indices(g, grid))
            .collect();
        let results = scorer.score_batch(&sols)?;

        let mut next: Vec<Individual> = elites.to_vec();
        let mut evaluated = Vec::with_capacity(sols.len());
        for ((genes, sol), r) in children.into_iter().zip(sols).zip(results) {
            incumbent.offer(&sol, &r);
            evaluated.push(EvaluatedCandidate::new(&sol, &r));
            next.push(Individual {
                genes,
                result: r,
            });
        }
        population = next;
        incumbent.record_step(generation, evaluated, 0);
    }

    incumbent.finish(id, "ga", scorer.evaluations())
}

fn tournament<'p, R: Rng>(pop: &'p [Individual], k: usize, rng: &mut R) -> &'p Individual {
    let mut best = &pop[rng.gen_range(0..pop.len())];
    for _ in 1..k {
        let c = &pop[rng.gen_range(0..pop.len())];
        if c.result.score > best.result.score {
            best = c;
        }
    }
    best
}

fn uniform_crossover<R: Rng>(a: &[i64; N_PARAMS], b: &[i64; N_PARAMS], rng: &mut R) -> [i64; N_PARAMS] {
    std::array::from_fn(|i| if rng.gen_bool(0.5) { a[i] } else { b[i] })
}

/// One-step moves; a move past a bound reflects back inside.
fn mutate<R: Rng>(genes: &mut [i64; N_PARAMS], grid: &ParameterGrid, rate: f64, rng: &mut R) {
    for (slot, g) in genes.iter_mut().enumerate() {
        if rng.gen_bool(rate) {
            let ax = grid.slot_axis(slot);
            let moved = *g + if rng.gen_bool(0.5) { 1 } else { -1 };
            *g = if moved > ax.hi {
                ax.hi - 1
            } else if moved < ax.lo {
                ax.lo + 1
            } else {
                moved
            }
            .clamp(ax.lo, ax.hi);
        }
    }
}
