use std::path::Path;
use std::time::Instant;

use super::{read_records, CandidateGenerator, Generation, GenerationError, GenerationRequest};

/// Replays stored responses in order, ignoring the prompt.
#[derive(Debug, Clone)]
pub struct ReplayGenerator {
    responses: Vec<String>,
    next: usize,
}

impl ReplayGenerator {
    pub fn new(responses: Vec<String>) -> Self {
        Self { responses, next: 0 }
    }

    /// Load the `response` field of every record in a JSONL transcript.
    pub fn from_path(path: &Path) -> Result<Self, GenerationError> {
        let records = read_records(path)?;
        Ok(Self::new(records.into_iter().map(|r| r.response).collect()))
    }

    pub fn remaining(&self) -> usize {
        self.responses.len() - self.next
    }
}

impl CandidateGenerator for ReplayGenerator {
    fn generate(&mut self, _req: &GenerationRequest<'_>) -> Result<Generation, GenerationError> {
        let started = Instant::now();
        let text = self
            .responses
            .get(self.next)
            .cloned()
            .ok_or(GenerationError::ReplayExhausted(self.responses.len()))?;
        self.next += 1;
        Ok(Generation {
            text,
            latency_secs: started.elapsed().as_secs_f64(),
            prompt_tokens: None,
            completion_tokens: None,
        })
    }
}
