use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::lattice::SolutionVector;
use crate::objective::EvaluationResult;

pub const DEFAULT_CAPACITY: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArchiveEntry {
    pub solution: SolutionVector,
    pub result: EvaluationResult,
}

/// Bounded history of evaluated solutions, ascending by score (best last).
#[derive(Debug, Clone)]
pub struct SolutionArchive {
    entries: Vec<ArchiveEntry>,
    keys: HashSet<String>,
    capacity: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InsertOutcome {
    Inserted,
    Duplicate,
    /// Archive was full and the new entry scored lowest.
    Evicted,
}

impl Default for SolutionArchive {
    fn default() -> Self {
        Self::new(DEFAULT_CAPACITY)
    }
}

impl SolutionArchive {
    pub fn new(capacity: usize) -> Self {
        Self {
            entries: Vec::with_capacity(capacity + 1),
            keys: HashSet::new(),
            capacity: capacity.max(1),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn best(&self) -> Option<&ArchiveEntry> {
        self.entries.last()
    }

    pub fn contains(&self, sol: &SolutionVector) -> bool {
        self.keys.contains(&sol.serialize())
    }

    pub fn insert(&mut self, solution: SolutionVector, result: EvaluationResult) -> InsertOutcome {
        let key = solution.serialize();
        if self.keys.contains(&key) {
            return InsertOutcome::Duplicate;
        }
        // Equal scores keep insertion order: the newer entry goes after.
        let pos = self
            .entries
            .partition_point(|e| e.result.score <= result.score);
        self.entries.insert(pos, ArchiveEntry { solution, result });
        self.keys.insert(key);
        if self.entries.len() > self.capacity {
            let evicted = self.entries.remove(0);
            self.keys.remove(&evicted.solution.serialize());
            if pos == 0 {
                return InsertOutcome::Evicted;
            }
        }
        InsertOutcome::Inserted
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{ParameterGrid, N_PARAMS};
    use proptest::prelude::*;

    fn sol(i: i64) -> SolutionVector {
        let mut idx = [1i64; N_PARAMS];
        idx[0] = 1 + i % 50;
        idx[1] = 1 + (i / 50) % 50;
        SolutionVector::from_indices(&idx, &ParameterGrid::default())
    }

    fn res(score: f64) -> EvaluationResult {
        EvaluationResult {
            kinf: 1.0,
            ppf: 1.2,
            score,
        }
    }

    #[test]
    fn insert_and_dedupe() {
        let mut a = SolutionArchive::default();
        assert_eq!(a.insert(sol(1), res(10.0)), InsertOutcome::Inserted);
        assert_eq!(a.len(), 1);
        assert_eq!(a.insert(sol(1), res(99.0)), InsertOutcome::Duplicate);
        assert_eq!(a.len(), 1);
        assert_eq!(a.best().unwrap().result.score, 10.0);
    }

    #[test]
    fn keeps_top_twenty_of_twenty_five() {
        let scores: Vec<f64> = (0..25).map(|i| ((i * 37) % 25) as f64 * 1.5 - 7.0).collect();
        let mut a = SolutionArchive::new(20);
        for (i, s) in scores.iter().enumerate() {
            a.insert(sol(i as i64), res(*s));
        }
        let mut oracle = scores.clone();
        oracle.sort_by(f64::total_cmp);
        let kept: Vec<f64> = a.entries().iter().map(|e| e.result.score).collect();
        assert_eq!(kept, oracle[5..].to_vec());
    }

    #[test]
    fn lowest_new_entry_is_evicted_when_full() {
        let mut a = SolutionArchive::new(2);
        a.insert(sol(1), res(5.0));
        a.insert(sol(2), res(6.0));
        assert_eq!(a.insert(sol(3), res(1.0)), InsertOutcome::Evicted);
        assert!(!a.contains(&sol(3)));
        assert_eq!(a.len(), 2);
    }

    proptest! {
        #[test]
        fn matches_sorted_list_oracle(ops in proptest::collection::vec((0i64..40, -50i32..100), 1..120), cap in 1usize..25) {
            let mut a = SolutionArchive::new(cap);
            let mut oracle: Vec<(i64, f64)> = Vec::new();
            for (id, s) in ops {
                let s = f64::from(s);
                a.insert(sol(id), res(s));
                if !oracle.iter().any(|(k, _)| *k == id) {
                    let pos = oracle.partition_point(|(_, x)| *x <= s);
                    oracle.insert(pos, (id, s));
                    if oracle.len() > cap {
                        oracle.remove(0);
                    }
                }
                let got: Vec<f64> = a.entries().iter().map(|e| e.result.score).collect();
                let want: Vec<f64> = oracle.iter().map(|(_, s)| *s).collect();
                prop_assert_eq!(&got, &want);
                prop_assert!(a.len() <= cap);
                prop_assert!(got.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }
}
