use serde::{Deserialize, Serialize};

use super::{EvalError, Evaluator, LatticeResponse};
use crate::lattice::{LatticeMap, SolutionVector};

/// Constants of the reduced-order lattice model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurrogateConfig {
    /// Asymptotic kinf at infinite enrichment.
    pub k_asym: f64,
    /// Enrichment (wt%) at which kinf reaches half of `k_asym`.
    pub k_sat: f64,
    /// Gadolinia worth suppression per wt%.
    pub gd_alpha: f64,
    /// Relative power boost of perimeter pins.
    pub s_edge: f64,
    /// Relative power boost of pins facing a water rod.
    pub s_water: f64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self {
            k_asym: 1.30,
            k_sat: 1.0,
            gd_alpha: 0.5,
            s_edge: 0.06,
            s_water: 0.08,
        }
    }
}

impl SurrogateConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        let all_positive = [self.k_asym, self.k_sat, self.gd_alpha]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
            && [self.s_edge, self.s_water]
                .iter()
                .all(|v| v.is_finite() && *v >= 0.0);
        if all_positive && self.k_asym > 1.0 {
            Ok(())
        } else {
            Err(EvalError::InvalidConfig(format!("{self:?}")))
        }
    }
}

/// Deterministic stand-in for a lattice transport code.
///
/// Each fueled half-cell `p` with multiplicity `m` contributes a worth
/// `w = e / (1 + gd_alpha * g)`. Reactivity saturates in the pin-averaged
/// worth `E`: `kinf = k_asym * E / (E + k_sat)`. Pin power is `w` scaled by
/// an edge and a water-adjacency factor; PPF is max over mean.
#[derive(Debug, Clone)]
pub struct SurrogateEvaluator {
    map: LatticeMap,
    cfg: SurrogateConfig,
}

impl SurrogateEvaluator {
    pub fn new(map: LatticeMap, cfg: SurrogateConfig) -> Result<Self, EvalError> {
        cfg.validate()?;
        if map.fueled_pin_count() == 0 {
            return Err(EvalError::InvalidConfig("lattice has no fuel".into()));
        }
        Ok(Self { map, cfg })
    }

    pub fn config(&self) -> &SurrogateConfig {
        &self.cfg
    }

    pub fn map(&self) -> &LatticeMap {
        &self.map
    }

    pub fn compute(&self, sol: &SolutionVector) -> LatticeResponse {
        let cfg = &self.cfg;
        let n_fuel = f64::from(self.map.fueled_pin_count());
        let mut worth_sum = 0.0;
        let mut power_sum = 0.0;
        let mut power_max = f64::NEG_INFINITY;
        for cell in self.map.fueled_cells() {
            let m = f64::from(cell.multiplicity);
            let worth = sol.enrichment_of(cell.fuel_type)
                / (1.0 + cfg.gd_alpha * sol.gadolinia_of(cell.fuel_type));
            let mut importance = 1.0;
            if cell.is_edge {
                importance += cfg.s_edge;
            }
            if cell.is_water_adjacent {
                importance += cfg.s_water;
            }
            let power = worth * importance;
            worth_sum += m * worth;
            power_sum += m * power;
            power_max = power_max.max(power);
        }
        let mean_worth = worth_sum / n_fuel;
        let kinf = cfg.k_asym * mean_worth / (mean_worth + cfg.k_sat);
        // max >= mean; guard rounding so ppf never dips under 1.
        let ppf = (power_max / (power_sum / n_fuel)).max(1.0);
        LatticeResponse { kinf, ppf }
    }
}

impl Evaluator for SurrogateEvaluator {
    fn evaluate(&self, sol: &SolutionVector) -> Result<LatticeResponse, EvalError> {
        Ok(self.compute(sol))
    }

    fn is_pure(&self) -> bool {
        true
    }
}
