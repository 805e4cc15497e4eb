//! Lattice objective: a base score penalized by kinf deviation from target
//! and by power-peaking excess above its limit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ScoreError {
    #[error("non-finite or out-of-domain evaluation: kinf={kinf}, ppf={ppf}")]
    InvalidEvaluation { kinf: f64, ppf: f64 },
    #[error("invalid score config: {0}")]
    InvalidConfig(String),
    #[error("penalty-term matrix is rank-deficient")]
    DegenerateSystem,
}

/// Targets and weights of the objective. Defaults reproduce the published
/// solution/score pairs (see [`derive_weights`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoreConfig {
    pub kinf_target: f64,
    pub ppf_target: f64,
    /// Score units per unit of |kinf - target|.
    pub w1: f64,
    /// Score units per unit of PPF above target.
    pub w2: f64,
    pub base: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            kinf_target: 1.05,
            ppf_target: 1.33,
            w1: 2000.0,
            w2: 1000.0,
            base: 100.0,
        }
    }
}

impl ScoreConfig {
    pub fn validate(&self) -> Result<(), ScoreError> {
        let ok = self.w1 > 0.0
            && self.w2 > 0.0
            && self.ppf_target > 1.0
            && self.kinf_target > 0.0
            && self.kinf_target < 2.0
            && self.base.is_finite();
        if ok {
            Ok(())
        } else {
            Err(ScoreError::InvalidConfig(format!("{self:?}")))
        }
    }

    /// `(|kinf - target|, max(0, ppf - target))`.
    pub fn penalty_terms(&self, kinf: f64, ppf: f64) -> (f64, f64) {
        (
            (kinf - self.kinf_target).abs(),
            (ppf - self.ppf_target).max(0.0),
        )
    }
}

/// Evaluated design: physics outputs plus objective value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub kinf: f64,
    pub ppf: f64,
    pub score: f64,
}

impl EvaluationResult {
    pub fn new(kinf: f64, ppf: f64, cfg: &ScoreConfig) -> Result<Self, ScoreError> {
        Ok(Self {
            kinf,
            ppf,
            score: score(kinf, ppf, cfg)?,
        })
    }
}

pub fn score(kinf: f64, ppf: f64, cfg: &ScoreConfig) -> Result<f64, ScoreError> {
    if !kinf.is_finite() || !ppf.is_finite() || kinf <= 0.0 || ppf < 1.0 {
        return Err(ScoreError::InvalidEvaluation { kinf, ppf });
    }
    let (dk, dp) = cfg.penalty_terms(kinf, ppf);
    Ok(cfg.base - cfg.w1 * dk - cfg.w2 * dp)
}

/// Published or observed `(kinf, ppf, score)` triple used for calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredPair {
    pub kinf: f64,
    pub ppf: f64,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightFit {
    pub w1: f64,
    pub w2: f64,
    /// Largest |predicted - observed| score over the input pairs.
    pub max_residual: f64,
}

/// Least-squares fit of `(w1, w2)` given the base and targets in `cfg`.
pub fn derive_weights(pairs: &[ScoredPair], cfg: &ScoreConfig) -> Result<WeightFit, ScoreError> {
    if pairs.len() < 2 {
        return Err(ScoreError::DegenerateSystem);
    }
    // Normal equations for y = w1 * a + w2 * b with y = base - score.
    let (mut aa, mut ab, mut bb, mut ay, mut by) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in pairs {
        let (a, b) = cfg.penalty_terms(p.kinf, p.ppf);
        let y = cfg.base - p.score;
        aa += a * a;
        ab += a * b;
        bb += b * b;
        ay += a * y;
        by += b * y;
    }
    let det = aa * bb - ab * ab;
    if !det.is_finite() || det.abs() <= 1e-12 * (aa * bb).max(f64::MIN_POSITIVE) {
        return Err(ScoreError::DegenerateSystem);
    }
    let w1 = (ay * bb - by * ab) / det;
    let w2 = (aa * by - ab * ay) / det;
    let max_residual = pairs
        .iter()
        .map(|p| {
            let (a, b) = cfg.penalty_terms(p.kinf, p.ppf);
            (cfg.base - w1 * a - w2 * b - p.score).abs()
        })
        .fold(0.0, f64::max);
    Ok(WeightFit {
        w1,
        w2,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_pairs() {
        let cfg = ScoreConfig::default();
        for (k, p, s) in [
            (1.03754, 1.361, 44.08),
            (1.03530, 1.334, 66.60),
            (1.03643, 1.351, 51.86),
        ] {
            assert!((score(k, p, &cfg).unwrap() - s).abs() < 0.01, "{k} {p}");
        }
    }

    #[test]
    fn targets_met_gives_base() {
        let cfg = ScoreConfig::default();
        assert_eq!(score(1.05, 1.20, &cfg).unwrap(), 100.0);
        assert_eq!(score(1.05, 1.33, &cfg).unwrap(), 100.0);
    }

    #[test]
    fn rejects_non_finite() {
        let cfg = ScoreConfig::default();
        assert!(score(f64::NAN, 1.2, &cfg).is_err());
        assert!(score(1.0, f64::INFINITY, &cfg).is_err());
        assert!(score(0.0, 1.2, &cfg).is_err());
        assert!(score(1.0, 0.9, &cfg).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(ScoreConfig::default().validate().is_ok());
        let bad = ScoreConfig {
            ppf_target: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn identical_pairs_are_degenerate() {
        let p = ScoredPair {
            kinf: 1.03754,
            ppf: 1.361,
            score: 44.08,
        };
        assert_eq!(
            derive_weights(&[p, p], &ScoreConfig::default()),
            Err(ScoreError::DegenerateSystem)
        );
        assert_eq!(
            derive_weights(&[p], &ScoreConfig::default()),
            Err(ScoreError::DegenerateSystem)
        );
    }

    #[test]
    fn recovers_synthetic_weights() {
        let truth = ScoreConfig {
            w1: 1500.0,
            w2: 800.0,
            ..Default::default()
        };
        let pairs: Vec<_> = [(1.01, 1.40), (1.07, 1.35), (1.045, 1.50), (0.99, 1.331)]
            .into_iter()
            .map(|(kinf, ppf)| ScoredPair {
                kinf,
                ppf,
                score: score(kinf, ppf, &truth).unwrap(),
            })
            .collect();
        let fit = derive_weights(&pairs, &ScoreConfig::default()).unwrap();
        assert!((fit.w1 - 1500.0).abs() < 1e-6);
        assert!((fit.w2 - 800.0).abs() < 1e-6);
        assert!(fit.max_residual < 1e-6);
    }

    proptest! {
        #[test]
        fn monotone_in_penalties(k in 0.5f64..1.5, p in 1.0f64..2.0, dk in 0.0f64..0.2, dp in 0.0f64..0.5) {
            let cfg = ScoreConfig::default();
            let s = score(k, p, &cfg).unwrap();
            let dev = (k - cfg.kinf_target).abs();
            let further = if k >= cfg.kinf_target { cfg.kinf_target + dev + dk } else { cfg.kinf_target - dev - dk };
            prop_assume!(further > 0.0);
            prop_assert!(score(further, p, &cfg).unwrap() <= s);
            prop_assert!(score(k, p + dp, &cfg).unwrap() <= s);
            prop_assert!(s <= cfg.base);
        }

        #[test]
        fn below_ppf_target_only_kinf_matters(k in 0.5f64..1.5, p1 in 1.0f64..1.33, p2 in 1.0f64..1.33) {
            let cfg = ScoreConfig::default();
            prop_assert_eq!(score(k, p1, &cfg).unwrap(), score(k, p2, &cfg).unwrap());
        }
    }
}
