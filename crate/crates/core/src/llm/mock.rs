use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CandidateGenerator, Generation, GenerationError, GenerationRequest};
use crate::lattice::{SolutionVector, N_PARAMS};

/// RNG stream reserved for the mutator, distinct from the loop's own stream.
pub(crate) const MUTATOR_STREAM: u64 = 7;

/// Offline stand-in for a model: perturbs the archive's best solution.
///
/// Each gene moves one grid step up or down with probability `mutation_prob`,
/// clamped to its bounds. The output uses the same `<sol>` line format the
/// prompts ask for.
#[derive(Debug, Clone)]
pub struct MockMutator {
    rng: ChaCha8Rng,
    mutation_prob: f64,
}

impl MockMutator {
    pub fn new(seed: u64, mutation_prob: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(MUTATOR_STREAM);
        Self { rng, mutation_prob }
    }

    fn mutate(&mut self, parent: &SolutionVector, req: &GenerationRequest<'_>) -> SolutionVector {
        let mut idx = parent.to_indices(req.grid);
        for (slot, gene) in idx.iter_mut().enumerate().take(N_PARAMS) {
            if self.rng.gen_bool(self.mutation_prob) {
                let ax = req.grid.slot_axis(slot);
                let delta = if self.rng.gen_bool(0.5) { 1 } else { -1 };
                *gene = (*gene + delta).clamp(ax.lo, ax.hi);
            }
        }
        SolutionVector::from_indices(&idx, req.grid)
    }
}

impl CandidateGenerator for MockMutator {
    fn generate(&mut self, req: &GenerationRequest<'_>) -> Result<Generation, GenerationError> {
        let started = Instant::now();
        let parent = req
            .archive
            .best()
            .map(|e| e.solution)
            .ok_or_else(|| GenerationError::InvalidConfig("mock mutator needs a non-empty archive".into()))?;
        let lines: Vec<String> = (0..req.prompt.batch_size)
            .map(|_| format!("<sol> {} <\\sol>", self.mutate(&parent, req)))
            .collect();
        Ok(Generation {
            text: lines.join("\n"),
            latency_secs: started.elapsed().as_secs_f64(),
            prompt_tokens: None,
            completion_tokens: None,
        })
    }
}
