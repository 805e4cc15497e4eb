//! GE-14 problem definition: the 15-parameter solution vector, its parameter
//! grid, and the half-symmetric lattice map.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of fuel types carrying an enrichment parameter.
pub const N_ENR: usize = 11;
/// Number of fuel types carrying a gadolinia parameter (types 8–11).
pub const N_GAD: usize = 4;
/// Total parameters in a serialized solution.
pub const N_PARAMS: usize = N_ENR + N_GAD;
/// Fuel types that carry gadolinia, in parameter order.
pub const GAD_TYPES: [u8; N_GAD] = [8, 9, 10, 11];
/// Side length of the full lattice.
pub const LATTICE_SIZE: usize = 10;

const GRID_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("invalid solution: {0}")]
    InvalidSolution(String),
    #[error("invalid parameter grid: {0}")]
    InvalidGrid(String),
    #[error("invalid lattice map: {0}")]
    InvalidMap(String),
    #[error("failed to read lattice map: {0}")]
    Io(String),
}

/// Parameter names in serialized order.
pub fn parameter_names() -> [String; N_PARAMS] {
    std::array::from_fn(|slot| match slot_kind(slot) {
        Slot::Enr(t) => format!("FUE{}_enr", t + 1),
        Slot::Gad(g) => format!("FUE{}_gads", GAD_TYPES[g]),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Enr(usize),
    Gad(usize),
}

/// Serialized slot order: FUE1..FUE7 enr, then (enr, gads) pairs for types 8..11.
fn slot_kind(slot: usize) -> Slot {
    if slot < 7 {
        Slot::Enr(slot)
    } else {
        let k = slot - 7;
        if k.is_multiple_of(2) {
            Slot::Enr(7 + k / 2)
        } else {
            Slot::Gad(k / 2)
        }
    }
}

/// Bounds and step sizes for enrichment and gadolinia, in wt%.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParameterGrid {
    pub enr_min: f64,
    pub enr_max: f64,
    pub enr_step: f64,
    pub gad_min: f64,
    pub gad_max: f64,
    pub gad_step: f64,
}

impl Default for ParameterGrid {
    fn default() -> Self {
        Self {
            enr_min: 0.1,
            enr_max: 5.0,
            enr_step: 0.1,
            gad_min: 0.0,
            gad_max: 10.0,
            gad_step: 1.0,
        }
    }
}

/// One axis of the grid: integer step indices in `[lo, hi]`, value = index * step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub step: f64,
    pub lo: i64,
    pub hi: i64,
}

impl Axis {
    pub fn value(&self, index: i64) -> f64 {
        // Rounding to 1e-9 keeps 22 * 0.1 equal to the literal 2.2.
        ((index as f64 * self.step) * 1e9).round() / 1e9
    }

    /// Clamp then round to the nearest step, ties upward.
    pub fn snap_index(&self, raw: f64) -> i64 {
        let idx = (raw / self.step + 0.5 + GRID_TOL).floor();
        (idx as i64).clamp(self.lo, self.hi)
    }

    /// Index of `v` if it lies exactly (within tolerance) on the grid.
    pub fn exact_index(&self, v: f64) -> Option<i64> {
        let q = v / self.step;
        let r = q.round();
        ((q - r).abs() <= GRID_TOL && (self.lo as f64..=self.hi as f64).contains(&r))
            .then_some(r as i64)
    }

    pub fn min_value(&self) -> f64 {
        self.value(self.lo)
    }

    pub fn max_value(&self) -> f64 {
        self.value(self.hi)
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }
}

impl ParameterGrid {
    pub fn validate(&self) -> Result<(), LatticeError> {
        let fields = [
            self.enr_min,
            self.enr_max,
            self.enr_step,
            self.gad_min,
            self.gad_max,
            self.gad_step,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(LatticeError::InvalidGrid("non-finite bound".into()));
        }
        if self.enr_step <= 0.0 || self.gad_step <= 0.0 {
            return Err(LatticeError::InvalidGrid("step must be positive".into()));
        }
        if self.enr_min >= self.enr_max || self.gad_min >= self.gad_max {
            return Err(LatticeError::InvalidGrid("min must be below max".into()));
        }
        if self.enr_min < 0.0 || self.gad_min < 0.0 {
            return Err(LatticeError::InvalidGrid("bounds must be nonnegative".into()));
        }
        if self.enr_axis().is_empty() || self.gad_axis().is_empty() {
            return Err(LatticeError::InvalidGrid("no grid point inside bounds".into()));
        }
        Ok(())
    }

    pub fn enr_axis(&self) -> Axis {
        axis(self.enr_min, self.enr_max, self.enr_step)
    }

    pub fn gad_axis(&self) -> Axis {
        axis(self.gad_min, self.gad_max, self.gad_step)
    }

    /// Axis for serialized slot `slot` (0..15).
    pub fn slot_axis(&self, slot: usize) -> Axis {
        match slot_kind(slot) {
            Slot::Enr(_) => self.enr_axis(),
            Slot::Gad(_) => self.gad_axis(),
        }
    }
}

fn axis(min: f64, max: f64, step: f64) -> Axis {
    Axis {
        step,
        lo: (min / step - GRID_TOL).ceil() as i64,
        hi: (max / step + GRID_TOL).floor() as i64,
    }
}

/// A candidate design: 11 type-level enrichments and 4 gadolinia contents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionVector {
    enr: [f64; N_ENR],
    gad: [f64; N_GAD],
}

impl SolutionVector {
    /// Build a solution, checking every value against `grid`.
    pub fn new(
        enr: [f64; N_ENR],
        gad: [f64; N_GAD],
        grid: &ParameterGrid,
    ) -> Result<Self, LatticeError> {
        let sol = Self { enr, gad };
        sol.check(grid)?;
        Ok(sol)
    }

    /// Build from the 15 values in serialized order, checking the grid.
    pub fn from_values(values: &[f64], grid: &ParameterGrid) -> Result<Self, LatticeError> {
        if values.len() != N_PARAMS {
            return Err(LatticeError::InvalidSolution(format!(
                "expected {N_PARAMS} values, got {}",
                values.len()
            )));
        }
        let mut enr = [0.0; N_ENR];
        let mut gad = [0.0; N_GAD];
        for (slot, &v) in values.iter().enumerate() {
            match slot_kind(slot) {
                Slot::Enr(t) => enr[t] = v,
                Slot::Gad(g) => gad[g] = v,
            }
        }
        Self::new(enr, gad, grid)
    }

    /// Build from grid step indices in serialized order; indices are clamped.
    pub fn from_indices(indices: &[i64; N_PARAMS], grid: &ParameterGrid) -> Self {
        let mut enr = [0.0; N_ENR];
        let mut gad = [0.0; N_GAD];
        for (slot, &i) in indices.iter().enumerate() {
            let ax = grid.slot_axis(slot);
            let v = ax.value(i.clamp(ax.lo, ax.hi));
            match slot_kind(slot) {
                Slot::Enr(t) => enr[t] = v,
                Slot::Gad(g) => gad[g] = v,
            }
        }
        Self { enr, gad }
    }

    /// Grid step indices in serialized order.
    pub fn to_indices(&self, grid: &ParameterGrid) -> [i64; N_PARAMS] {
        let values = self.values();
        std::array::from_fn(|slot| grid.slot_axis(slot).snap_index(values[slot]))
    }

    pub fn enr(&self) -> &[f64; N_ENR] {
        &self.enr
    }

    pub fn gad(&self) -> &[f64; N_GAD] {
        &self.gad
    }

    /// Enrichment of fuel type `t` (1-based).
    pub fn enrichment_of(&self, fuel_type: u8) -> f64 {
        self.enr[fuel_type as usize - 1]
    }

    /// Gadolinia content of fuel type `t` (1-based); zero for types 1–7.
    pub fn gadolinia_of(&self, fuel_type: u8) -> f64 {
        GAD_TYPES
            .iter()
            .position(|&g| g == fuel_type)
            .map_or(0.0, |g| self.gad[g])
    }

    /// The 15 values in serialized order.
    pub fn values(&self) -> [f64; N_PARAMS] {
        std::array::from_fn(|slot| match slot_kind(slot) {
            Slot::Enr(t) => self.enr[t],
            Slot::Gad(g) => self.gad[g],
        })
    }

    pub fn check(&self, grid: &ParameterGrid) -> Result<(), LatticeError> {
        for (slot, v) in self.values().into_iter().enumerate() {
            if grid.slot_axis(slot).exact_index(v).is_none() {
                return Err(LatticeError::InvalidSolution(format!(
                    "{} = {v} is off-grid or out of bounds",
                    parameter_names()[slot]
                )));
            }
        }
        Ok(())
    }

    /// Comma-joined values, one decimal each, no surrounding tags.
    pub fn serialize(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for SolutionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.values().iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v:.1}")?;
        }
        Ok(())
    }
}

/// Split a comma-separated body into numbers. Tokens are trimmed.
pub fn parse_values(text: &str) -> Result<Vec<f64>, LatticeError> {
    text.split(',')
        .map(|tok| {
            let tok = tok.trim();
            tok.parse::<f64>()
                .map_err(|_| LatticeError::InvalidSolution(format!("not a number: {tok:?}")))
        })
        .collect()
}

/// Parse a serialized solution and check it against `grid`.
pub fn parse_solution(text: &str, grid: &ParameterGrid) -> Result<SolutionVector, LatticeError> {
    SolutionVector::from_values(&parse_values(text)?, grid)
}

/// Clamp each of the 15 raw values into range and round to the grid.
pub fn snap_to_grid(raw: &[f64], grid: &ParameterGrid) -> Result<SolutionVector, LatticeError> {
    if raw.len() != N_PARAMS {
        return Err(LatticeError::InvalidSolution(format!(
            "expected {N_PARAMS} values, got {}",
            raw.len()
        )));
    }
    if let Some(v) = raw.iter().find(|v| !v.is_finite()) {
        return Err(LatticeError::InvalidSolution(format!("non-finite value {v}")));
    }
    let indices: [i64; N_PARAMS] = std::array::from_fn(|slot| {
        let ax = grid.slot_axis(slot);
        ax.snap_index(raw[slot].clamp(ax.min_value(), ax.max_value()))
    });
    Ok(SolutionVector::from_indices(&indices, grid))
}

/// One entry of the lower-triangular half map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HalfCell {
    /// 1-based row.
    pub row: usize,
    /// 1-based column, `col <= row`.
    pub col: usize,
    /// 0 for water, 1–11 for fuel.
    pub fuel_type: u8,
    /// Number of full-lattice pins this cell stands for.
    pub multiplicity: u32,
    pub is_edge: bool,
    pub is_water_adjacent: bool,
}

impl HalfCell {
    pub fn is_water(&self) -> bool {
        self.fuel_type == 0
    }
}

pub const GE14_DOM_MAP: &str = "\
1
2  7
3  8  5
7  4  9  6
4 10  5 11  5
4  5 11  0  0  5
7  5  6  0  0  5 10
7  5  5  5  5  5  5  5
3  6 10  5  5  5  5  5 10
2  7  6  6  6  6  6  6  4  7
";

/// Half-symmetric 10×10 lattice map with derived per-cell geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeMap {
    rows: Vec<Vec<u8>>,
    cells: Vec<HalfCell>,
}

impl Default for LatticeMap {
    fn default() -> Self {
        Self::ge14()
    }
}

impl LatticeMap {
    /// The built-in GE-14 dominant lattice.
    pub fn ge14() -> Self {
        Self::parse(GE14_DOM_MAP).expect("built-in map is valid")
    }

    pub fn from_file(path: &Path) -> Result<Self, LatticeError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LatticeError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parse 10 rows of whitespace-separated fuel-type ids; row `i` holds `i` entries.
    pub fn parse(text: &str) -> Result<Self, LatticeError> {
        let mut rows = Vec::with_capacity(LATTICE_SIZE);
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let row_no = rows.len() + 1;
            let row = line
                .split_whitespace()
                .map(|tok| match tok.parse::<u8>() {
                    Ok(t) if t <= N_ENR as u8 => Ok(t),
                    _ => Err(LatticeError::InvalidMap(format!(
                        "row {row_no}: {tok:?} is not a fuel type in 0..=11"
                    ))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            if row.len() != row_no {
                return Err(LatticeError::InvalidMap(format!(
                    "row {row_no} has {} entries, expected {row_no}",
                    row.len()
                )));
            }
            rows.push(row);
        }
        if rows.len() != LATTICE_SIZE {
            return Err(LatticeError::InvalidMap(format!(
                "expected {LATTICE_SIZE} rows, got {}",
                rows.len()
            )));
        }
        Ok(Self::from_rows(rows))
    }

    fn from_rows(rows: Vec<Vec<u8>>) -> Self {
        let n = LATTICE_SIZE;
        let type_at = |r: usize, c: usize| -> u8 {
            let (i, j) = if c <= r { (r, c) } else { (c, r) };
            rows[i - 1][j - 1]
        };
        let mut cells = Vec::with_capacity(n * (n + 1) / 2);
        for i in 1..=n {
            for j in 1..=i {
                let water_adj = [(0i64, 1i64), (0, -1), (1, 0), (-1, 0)].iter().any(|(dr, dc)| {
                    let (r, c) = (i as i64 + dr, j as i64 + dc);
                    (1..=n as i64).contains(&r)
                        && (1..=n as i64).contains(&c)
                        && type_at(r as usize, c as usize) == 0
                });
                cells.push(HalfCell {
                    row: i,
                    col: j,
                    fuel_type: rows[i - 1][j - 1],
                    multiplicity: if i == j { 1 } else { 2 },
                    is_edge: i == n || j == 1,
                    is_water_adjacent: water_adj,
                });
            }
        }
        Self { rows, cells }
    }

    pub fn cells(&self) -> &[HalfCell] {
        &self.cells
    }

    pub fn fueled_cells(&self) -> impl Iterator<Item = &HalfCell> {
        self.cells.iter().filter(|c| !c.is_water())
    }

    /// Full-lattice pin count for fuel type `t` (0 counts water cells).
    pub fn type_count(&self, fuel_type: u8) -> u32 {
        self.cells
            .iter()
            .filter(|c| c.fuel_type == fuel_type)
            .map(|c| c.multiplicity)
            .sum()
    }

    /// Number of fueled pins in the full lattice.
    pub fn fueled_pin_count(&self) -> u32 {
        self.fueled_cells().map(|c| c.multiplicity).sum()
    }

    /// The map in the same text layout it is parsed from.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            for (j, t) in row.iter().enumerate() {
                if j == 0 {
                    out.push_str(&t.to_string());
                } else {
                    out.push_str(&format!(" {t:>2}"));
                }
            }
            out.push('\n');
        }
        out
    }

    /// Mirror-expand the half map with a solution's parameters.
    pub fn expand(&self, sol: &SolutionVector) -> FullLattice {
        let mut pins = [[Pin::Water; LATTICE_SIZE]; LATTICE_SIZE];
        for cell in &self.cells {
            let pin = if cell.is_water() {
                Pin::Water
            } else {
                Pin::Fuel {
                    fuel_type: cell.fuel_type,
                    enrichment: sol.enrichment_of(cell.fuel_type),
                    gadolinia: sol.gadolinia_of(cell.fuel_type),
                }
            };
            pins[cell.row - 1][cell.col - 1] = pin;
            pins[cell.col - 1][cell.row - 1] = pin;
        }
        FullLattice { pins }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pin {
    Water,
    Fuel {
        fuel_type: u8,
        enrichment: f64,
        gadolinia: f64,
    },
}

/// Full 10×10 lattice; `pins[r][c]` is 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct FullLattice {
    pub pins: [[Pin; LATTICE_SIZE]; LATTICE_SIZE],
}

impl FullLattice {
    /// Pin at 1-based `(row, col)`.
    pub fn at(&self, row: usize, col: usize) -> Pin {
        self.pins[row - 1][col - 1]
    }
}

/// Mirror-expand `map` with `sol`.
pub fn expand_full_lattice(map: &LatticeMap, sol: &SolutionVector) -> FullLattice {
    map.expand(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference_design() -> SolutionVector {
        SolutionVector::new(
            [1.4, 2.2, 2.6, 4.2, 5.0, 4.7, 3.7, 4.1, 4.9, 5.0, 5.0],
            [8.0, 7.0, 6.0, 8.0],
            &ParameterGrid::default(),
        )
        .unwrap()
    }

    #[test]
    fn serializes_in_interleaved_order() {
        assert_eq!(
            reference_design().serialize(),
            "1.4,2.2,2.6,4.2,5.0,4.7,3.7,4.1,8.0,4.9,7.0,5.0,6.0,5.0,8.0"
        );
        let uniform = SolutionVector::new([5.0; 11], [0.0; 4], &ParameterGrid::default()).unwrap();
        assert_eq!(
            uniform.serialize(),
            "5.0,5.0,5.0,5.0,5.0,5.0,5.0,5.0,0.0,5.0,0.0,5.0,0.0,5.0,0.0"
        );
    }

    #[test]
    fn parameter_names_follow_wire_order() {
        let names = parameter_names();
        assert_eq!(names[7], "FUE8_enr");
        assert_eq!(names[8], "FUE8_gads");
        assert_eq!(names[14], "FUE11_gads");
    }

    #[test]
    fn snap_clamps_and_rounds_up_on_ties() {
        let grid = ParameterGrid::default();
        let mut raw = [3.0; N_PARAMS];
        raw[0] = 5.3;
        raw[14] = 13.8;
        raw[1] = 2.55;
        raw[8] = -2.0;
        raw[2] = 0.0;
        let s = snap_to_grid(&raw, &grid).unwrap();
        assert_eq!(s.enr()[0], 5.0);
        assert_eq!(s.gad()[3], 10.0);
        assert_eq!(s.enr()[1], 2.6);
        assert_eq!(s.gad()[0], 0.0);
        assert_eq!(s.enr()[2], 0.1);
    }

    #[test]
    fn snap_rejects_non_finite() {
        let mut raw = [1.0; N_PARAMS];
        raw[3] = f64::NAN;
        assert!(matches!(
            snap_to_grid(&raw, &ParameterGrid::default()),
            Err(LatticeError::InvalidSolution(_))
        ));
        raw[3] = f64::INFINITY;
        assert!(snap_to_grid(&raw, &ParameterGrid::default()).is_err());
    }

    #[test]
    fn new_rejects_off_grid_and_out_of_range() {
        let grid = ParameterGrid::default();
        assert!(SolutionVector::new([2.25; 11], [1.0; 4], &grid).is_err());
        assert!(SolutionVector::new([5.1; 11], [1.0; 4], &grid).is_err());
        assert!(SolutionVector::new([0.0; 11], [1.0; 4], &grid).is_err());
        assert!(SolutionVector::new([2.0; 11], [11.0; 4], &grid).is_err());
        assert!(SolutionVector::new([2.0; 11], [0.5; 4], &grid).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(ParameterGrid::default().validate().is_ok());
        let bad = ParameterGrid {
            enr_step: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let inverted = ParameterGrid {
            gad_min: 10.0,
            gad_max: 1.0,
            ..Default::default()
        };
        assert!(inverted.validate().is_err());
        let g = ParameterGrid::default();
        assert_eq!(g.enr_axis().len(), 50);
        assert_eq!(g.gad_axis().len(), 11);
    }

    #[test]
    fn map_rejects_ragged_and_out_of_range() {
        let ragged = GE14_DOM_MAP.replacen("2  7", "2  7  7", 1);
        assert!(matches!(LatticeMap::parse(&ragged), Err(LatticeError::InvalidMap(_))));
        let bad_type = GE14_DOM_MAP.replacen("3  8  5", "3 12  5", 1);
        assert!(LatticeMap::parse(&bad_type).is_err());
        let short: String = GE14_DOM_MAP.lines().take(9).collect::<Vec<_>>().join("\n");
        assert!(LatticeMap::parse(&short).is_err());
        assert!(LatticeMap::parse("x").is_err());
    }

    #[test]
    fn map_render_round_trips() {
        let map = LatticeMap::ge14();
        assert_eq!(map.render(), GE14_DOM_MAP);
        assert_eq!(LatticeMap::parse(&map.render()).unwrap(), map);
    }

    #[test]
    fn first_cell_is_type_one_without_gadolinia() {
        let full = LatticeMap::ge14().expand(&reference_design());
        assert_eq!(
            full.at(1, 1),
            Pin::Fuel {
                fuel_type: 1,
                enrichment: 1.4,
                gadolinia: 0.0
            }
        );
    }

    fn solution_strategy() -> impl Strategy<Value = SolutionVector> {
        (
            proptest::array::uniform11(1i64..=50),
            proptest::array::uniform4(0i64..=10),
        )
            .prop_map(|(e, g)| {
                let mut idx = [0i64; N_PARAMS];
                let mut ei = e.iter();
                let mut gi = g.iter();
                for (slot, out) in idx.iter_mut().enumerate() {
                    *out = match slot_kind(slot) {
                        Slot::Enr(_) => *ei.next().unwrap(),
                        Slot::Gad(_) => *gi.next().unwrap(),
                    };
                }
                SolutionVector::from_indices(&idx, &ParameterGrid::default())
            })
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip(sol in solution_strategy()) {
            let grid = ParameterGrid::default();
            let text = sol.serialize();
            let back = parse_solution(&text, &grid).unwrap();
            prop_assert_eq!(back, sol);
            prop_assert_eq!(back.serialize(), text);
        }

        #[test]
        fn snap_is_idempotent(raw in proptest::collection::vec(-20.0f64..20.0, N_PARAMS)) {
            let grid = ParameterGrid::default();
            let once = snap_to_grid(&raw, &grid).unwrap();
            prop_assert!(once.check(&grid).is_ok());
            let twice = snap_to_grid(&once.values(), &grid).unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn expansion_is_transpose_symmetric(sol in solution_strategy()) {
            let full = LatticeMap::ge14().expand(&sol);
            for r in 0..LATTICE_SIZE {
                for c in 0..LATTICE_SIZE {
                    prop_assert_eq!(full.pins[r][c], full.pins[c][r]);
                }
            }
        }

        #[test]
        fn indices_round_trip(sol in solution_strategy()) {
            let grid = ParameterGrid::default();
            prop_assert_eq!(SolutionVector::from_indices(&sol.to_indices(&grid), &grid), sol);
        }
    }
}
