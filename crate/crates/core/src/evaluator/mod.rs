//! Evaluators map a [`SolutionVector`] to `(kinf, ppf)`.
//!
//! [`SurrogateEvaluator`] is a deterministic reduced-order model.
//! [`ExternalEvaluator`] runs any lattice code that speaks the one-line JSON
//! protocol on stdin/stdout. [`CachedEvaluator`] memoizes either one.

mod cache;
mod external;
mod surrogate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::SolutionVector;

pub use cache::CachedEvaluator;
pub use external::{ExternalConfig, ExternalEvaluator};
pub use surrogate::{SurrogateConfig, SurrogateEvaluator};

/// Physics outputs of one lattice evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeResponse {
    pub kinf: f64,
    pub ppf: f64,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("failed to spawn evaluator {program}: {source}")]
    SpawnFailed {
        program: String,
        #[source]
        source: std::io::Error,
    },
    #[error("evaluator timed out after {0:.1}s")]
    Timeout(f64),
    #[error("evaluator protocol error: {0}")]
    ProtocolError(String),
    #[error("evaluator exited with {status}: {stderr}")]
    EvaluatorReportedError { status: String, stderr: String },
    #[error("evaluator I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid evaluator config: {0}")]
    InvalidConfig(String),
}

pub trait Evaluator: Send + Sync {
    fn evaluate(&self, sol: &SolutionVector) -> Result<LatticeResponse, EvalError>;

    /// True when evaluation is a pure in-process function, so callers may
    /// evaluate candidates in parallel.
    fn is_pure(&self) -> bool {
        false
    }
}

impl<E: Evaluator + ?Sized> Evaluator for &E {
    fn evaluate(&self, sol: &SolutionVector) -> Result<LatticeResponse, EvalError> {
        (**self).evaluate(sol)
    }

    fn is_pure(&self) -> bool {
        (**self).is_pure()
    }
}

impl<E: Evaluator + ?Sized> Evaluator for std::sync::Arc<E> {
    fn evaluate(&self, sol: &SolutionVector) -> Result<LatticeResponse, EvalError> {
        (**self).evaluate(sol)
    }

    fn is_pure(&self) -> bool {
        (**self).is_pure()
    }
}

impl<E: Evaluator + ?Sized> Evaluator for Box<E> {
    fn evaluate(&self, sol: &SolutionVector) -> Result<LatticeResponse, EvalError> {
        (**self).evaluate(sol)
    }

    fn is_pure(&self) -> bool {
        (**self).is_pure()
    }
}
