//! Candidate generators: an OpenAI-compatible chat-completion client and two
//! offline backends (seeded mutator, transcript replay).

mod http;
mod record;
mod mock;
mod replay;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::ParameterGrid;
use crate::prompt::{MetaPrompt, SolutionArchive};

pub use http::{backoff_delay, HttpGenerator};
pub use record::{log_record, read_records, GenerationRecord, JsonlLog, RecordSink};
pub use mock::MockMutator;
pub use replay::ReplayGenerator;

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("transport error after {attempts} attempt(s): {message}")]
    TransportError { attempts: u32, message: String },
    #[error("authentication rejected (HTTP {0})")]
    AuthError(u16),
    #[error("replay transcript exhausted after {0} response(s)")]
    ReplayExhausted(usize),
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("run log I/O error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Http,
    #[default]
    #[serde(alias = "mock")]
    MockMutator,
    Replay,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Http => "http",
            Backend::MockMutator => "mock_mutator",
            Backend::Replay => "replay",
        })
    }
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "http" => Ok(Backend::Http),
            "mock" | "mock_mutator" | "mutator" => Ok(Backend::MockMutator),
            "replay" => Ok(Backend::Replay),
            other => Err(format!("unknown backend {other:?} (expected http, mock or replay)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub backend: Backend,
    /// Base URL of an OpenAI-compatible API, e.g. `https://host/v1`.
    pub endpoint: Option<String>,
    pub model: Option<String>,
    /// Name of the environment variable holding the API key.
    pub api_key_env: Option<String>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub backoff_base_secs: f64,
    pub backoff_max_secs: f64,
    /// JSONL transcript for the replay backend.
    pub transcript: Option<PathBuf>,
    /// Per-gene step probability for the mock mutator.
    pub mutation_prob: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            backend: Backend::MockMutator,
            endpoint: None,
            model: None,
            api_key_env: None,
            temperature: 1.0,
            max_tokens: 4096,
            timeout_secs: 120.0,
            max_retries: 5,
            backoff_base_secs: 1.0,
            backoff_max_secs: 60.0,
            transcript: None,
            mutation_prob: 0.3,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), GenerationError> {
        let bad = |m: &str| Err(GenerationError::InvalidConfig(m.to_string()));
        match self.backend {
            Backend::Http => {
                if self.endpoint.is_none() || self.model.is_none() || self.api_key_env.is_none() {
                    return bad("http backend needs endpoint, model and api_key_env");
                }
                if self.timeout_secs.is_nan() || self.timeout_secs <= 0.0 {
                    return bad("timeout_secs must be positive");
                }
                if self.backoff_base_secs.is_nan() || self.backoff_base_secs < 0.0 {
                    return bad("backoff_base_secs must be nonnegative");
                }
            }
            Backend::Replay => {
                if self.transcript.is_none() {
                    return bad("replay backend needs a transcript path");
                }
            }
            Backend::MockMutator => {
                if !(0.0..=1.0).contains(&self.mutation_prob) {
                    return bad("mutation_prob must lie in [0, 1]");
                }
            }
        }
        Ok(())
    }
}

/// Inputs available to a generator at one optimization step.
#[derive(Debug, Clone, Copy)]
pub struct GenerationRequest<'a> {
    pub step: usize,
    pub prompt: &'a MetaPrompt,
    pub archive: &'a SolutionArchive,
    pub grid: &'a ParameterGrid,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Generation {
    pub text: String,
    pub latency_secs: f64,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

pub trait CandidateGenerator: Send {
    fn generate(&mut self, req: &GenerationRequest<'_>) -> Result<Generation, GenerationError>;
}

/// Construct the configured backend. `seed` drives the mock mutator.
pub fn build_generator(
    cfg: &GeneratorConfig,
    seed: u64,
) -> Result<Box<dyn CandidateGenerator>, GenerationError> {
    cfg.validate()?;
    Ok(match cfg.backend {
        Backend::Http => Box::new(HttpGenerator::from_config(cfg)?),
        Backend::MockMutator => Box::new(MockMutator::new(seed, cfg.mutation_prob)),
        Backend::Replay => {
            let path = cfg.transcript.as_ref().expect("validated");
            Box::new(ReplayGenerator::from_path(path)?)
        }
    })
}
