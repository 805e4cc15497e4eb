use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::{EvalError, Evaluator, LatticeResponse};
use crate::lattice::SolutionVector;

/// Memoizes an evaluator by serialized solution. Scoped to one run.
///
/// Two threads missing on the same key both evaluate; the evaluator is
/// deterministic, so whichever insert lands is the same value.
pub struct CachedEvaluator<E> {
    inner: E,
    cache: Mutex<HashMap<String, LatticeResponse>>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl<E: Evaluator> CachedEvaluator<E> {
    pub fn new(inner: E) -> Self {
        Self {
            inner,
            cache: Mutex::new(HashMap::new()),
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.cache.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<E: Evaluator> Evaluator for CachedEvaluator<E> {
    fn evaluate(&self, sol: &SolutionVector) -> Result<LatticeResponse, EvalError> {
        let key = sol.serialize();
        if let Some(hit) = self
            .cache
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get(&key)
        {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(*hit);
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let value = self.inner.evaluate(sol)?;
        self.cache
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .entry(key)
            .or_insert(value);
        Ok(value)
    }

    fn is_pure(&self) -> bool {
        self.inner.is_pure()
    }
}
