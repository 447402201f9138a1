//! Nonnegative measures stored as one mass per finest-level cube.
//!
//! The mass of a coarser dyadic cube is the sum over its finest descendants.
//! Each cell's mass is read as a uniform density on that cell, so closed and
//! half-open dyadic cubes carry the same mass.

mod frostman;

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::dyadic::{check_dim, data_lines, parse_header, CubeId, GridSet, MAX_LEVEL};
use crate::error::{Error, Result};

pub use frostman::{
    default_lower_constant, frostman_build, frostman_build_with, verify_frostman_lower,
    verify_frostman_upper, verify_frostman_upper_with, BallSample, CubeViolation, FrostmanOptions,
    FrostmanOutput, FrostmanParams, LowerReport, TraceEntry, UpperReport,
};

#[derive(Clone, Debug, PartialEq)]
pub struct GridMeasure {
    dim: usize,
    level: u32,
    cells: Vec<(CubeId, f64)>,
}

impl GridMeasure {
    /// Duplicate cells are rejected; masses must be finite and nonnegative.
    pub fn new(dim: usize, level: u32, cells: impl IntoIterator<Item = (CubeId, f64)>) -> Result<Self> {
        check_dim(dim)?;
        if level > MAX_LEVEL {
            return Err(Error::LevelTooDeep(level));
        }
        let mut cells: Vec<(CubeId, f64)> = cells.into_iter().collect();
        for (c, m) in &cells {
            if c.level() != level || c.dim() != dim {
                return Err(Error::GridMismatch(format!(
                    "cell {c:?} is not a level-{level} cube in dimension {dim}"
                )));
            }
            if !(m.is_finite() && *m >= 0.0) {
                return Err(Error::InvalidArgument(format!("mass {m} on {c:?} is not a finite nonnegative number")));
            }
        }
        cells.sort_unstable_by_key(|c| c.0);
        if let Some(w) = cells.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument(format!("duplicate cell {:?}", w[0].0)));
        }
        Ok(GridMeasure { dim, level, cells })
    }

    pub(crate) fn from_sorted_unchecked(dim: usize, level: u32, cells: Vec<(CubeId, f64)>) -> Self {
        GridMeasure { dim, level, cells }
    }

    pub fn zero(dim: usize, level: u32) -> Result<Self> {
        GridMeasure::new(dim, level, std::iter::empty())
    }

    /// Equal mass `mass` on every cell of `set`.
    pub fn constant(set: &GridSet, mass: f64) -> Result<Self> {
        GridMeasure::new(set.dim(), set.level(), set.iter().map(|&c| (c, mass)))
    }

    /// Lebesgue measure restricted to `set` (mass `δ^n` per cell).
    pub fn lebesgue(set: &GridSet) -> Self {
        let vol = crate::dyadic::side_at(set.level() * set.dim() as u32);
        GridMeasure::from_sorted_unchecked(
            set.dim(),
            set.level(),
            set.iter().map(|&c| (c, vol)).collect(),
        )
    }

    /// Probability measure spreading mass evenly over the cells of `set`.
    pub fn uniform_probability(set: &GridSet) -> Self {
        let m = if set.is_empty() { 0.0 } else { 1.0 / set.len() as f64 };
        GridMeasure::from_sorted_unchecked(set.dim(), set.level(), set.iter().map(|&c| (c, m)).collect())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Cells with their masses in lexicographic order.
    pub fn cells(&self) -> &[(CubeId, f64)] {
        &self.cells
    }

    pub fn mass_at(&self, cell: &CubeId) -> f64 {
        self.cells
            .binary_search_by(|(c, _)| c.cmp(cell))
            .map(|i| self.cells[i].1)
            .unwrap_or(0.0)
    }

    /// Sum of all masses, in cell order.
    pub fn total_mass(&self) -> f64 {
        self.cells.iter().map(|(_, m)| m).sum()
    }

    /// Mass of an arbitrary dyadic cube no finer than the measure's level.
    pub fn mass_of(&self, q: &CubeId) -> f64 {
        if q.level() > self.level {
            return 0.0;
        }
        self.cells
            .iter()
            .filter(|(c, _)| q.contains(c))
            .map(|(_, m)| m)
            .sum()
    }

    /// Masses of occupied cubes at `level`, accumulated in cell order.
    pub fn level_masses(&self, level: u32) -> BTreeMap<CubeId, f64> {
        let mut out = BTreeMap::new();
        for (c, m) in &self.cells {
            *out.entry(c.ancestor_unchecked(level.min(self.level))).or_insert(0.0) += m;
        }
        out
    }

    /// Occupied-cube masses at every level `0..=J`.
    pub fn mass_table(&self) -> Vec<BTreeMap<CubeId, f64>> {
        (0..=self.level).map(|k| self.level_masses(k)).collect()
    }

    /// Cells carrying positive mass.
    pub fn support(&self) -> GridSet {
        let cells = self.cells.iter().filter(|(_, m)| *m > 0.0).map(|(c, _)| *c).collect();
        GridSet::from_sorted_unchecked(self.dim, self.level, cells)
    }

    /// `μ|_q`: drops all mass outside `q`.
    pub fn restrict(&self, q: &CubeId) -> GridMeasure {
        let cells = self.cells.iter().filter(|(c, _)| q.contains(c)).copied().collect();
        GridMeasure::from_sorted_unchecked(self.dim, self.level, cells)
    }

    /// Restriction to a union of cells at the measure's level.
    pub fn restrict_to_set(&self, set: &GridSet) -> GridMeasure {
        let cells = self.cells.iter().filter(|(c, _)| set.contains(c)).copied().collect();
        GridMeasure::from_sorted_unchecked(self.dim, self.level, cells)
    }

    /// Outer approximation of `μ(B(center, r))`: total mass of the cells whose
    /// closed cube meets the closed ball. Meaningful for `r >= δ`.
    pub fn ball_mass(&self, center: &[f64], r: f64) -> f64 {
        let r2 = r * r;
        self.cells
            .iter()
            .filter(|(c, _)| c.dist2_to_point(center) <= r2)
            .map(|(_, m)| m)
            .sum()
    }

    /// Text form: header `n J`, then `coords... mass` with 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.dim, self.level);
        for (c, m) in &self.cells {
            for x in c.coords() {
                out.push_str(&x.to_string());
                out.push(' ');
            }
            out.push_str(&format!("{m:.16e}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = data_lines(text);
        let (dim, level) = parse_header(lines.next())?;
        let mut cells = Vec::new();
        for (lineno, line) in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != dim + 1 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected {} fields, found {}", dim + 1, toks.len()),
                });
            }
            let coords = toks[..dim]
                .iter()
                .map(|t| t.parse::<u32>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    line: lineno,
                    msg: e.to_string(),
                })?;
            let mass: f64 = toks[dim].parse().map_err(|e| Error::Parse {
                line: lineno,
                msg: format!("mass: {e}"),
            })?;
            let cube = CubeId::new(level, &coords).map_err(|e| Error::Parse {
                line: lineno,
                msg: e.to_string(),
            })?;
            cells.push((cube, mass));
        }
        GridMeasure::new(dim, level, cells)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        GridMeasure::from_text(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// Partition of the occupied cells by mass against a threshold.
#[derive(Clone, Debug, Serialize)]
pub struct HeavyLightSplit {
    #[serde(skip)]
    pub heavy: GridSet,
    #[serde(skip)]
    pub light: GridSet,
    pub threshold: f64,
}

impl HeavyLightSplit {
    /// Heavy cells grouped by their ancestor at `coarse_level`.
    pub fn heavy_by_ancestor(&self, coarse_level: u32) -> BTreeMap<CubeId, Vec<CubeId>> {
        let mut out: BTreeMap<CubeId, Vec<CubeId>> = BTreeMap::new();
        for c in self.heavy.iter() {
            out.entry(c.ancestor_unchecked(coarse_level)).or_default().push(*c);
        }
        out
    }
}

/// Heavy: mass `>= threshold`; light: mass `< threshold`.
pub fn heavy_light_split(measure: &GridMeasure, threshold: f64) -> HeavyLightSplit {
    let (heavy, light): (Vec<_>, Vec<_>) = measure.cells().iter().partition(|(_, m)| *m >= threshold);
    let strip = |v: Vec<&(CubeId, f64)>| {
        GridSet::from_sorted_unchecked(measure.dim(), measure.level(), v.into_iter().map(|(c, _)| *c).collect())
    };
    HeavyLightSplit {
        heavy: strip(heavy),
        light: strip(light),
        threshold,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full_lebesgue(n: usize, j: u32) -> GridMeasure {
        GridMeasure::lebesgue(&GridSet::full(n, j).unwrap())
    }

    #[test]
    fn split_thresholds() {
        let m = full_lebesgue(2, 4);
        let all = heavy_light_split(&m, 0.0);
        assert_eq!(all.heavy.len(), 256);
        assert!(all.light.is_empty());
        let none = heavy_light_split(&m, 2.0);
        assert!(none.heavy.is_empty());
        assert_eq!(none.light.len(), 256);
        // 2^-8 >= 2^-10
        let split = heavy_light_split(&m, (-4.0f64 * 2.5).exp2());
        assert_eq!(split.heavy.len(), 256);
    }

    #[test]
    fn split_partitions_cells() {
        let set = GridSet::full(2, 3).unwrap();
        let cells = set.iter().enumerate().map(|(i, &c)| (c, i as f64 / 64.0));
        let m = GridMeasure::new(2, 3, cells).unwrap();
        let split = heavy_light_split(&m, 0.5);
        assert_eq!(split.heavy.len() + split.light.len(), 64);
        assert!(split.heavy.iter().all(|c| m.mass_at(c) >= 0.5));
        assert!(split.light.iter().all(|c| m.mass_at(c) < 0.5));
    }

    #[test]
    fn restrict_examples() {
        let m = full_lebesgue(2, 2);
        let root = CubeId::root(2).unwrap();
        assert_eq!(m.restrict(&root), m);
        let q = CubeId::new(1, &[1, 0]).unwrap();
        assert_eq!(m.restrict(&q).total_mass(), 0.25);
        let sparse = GridMeasure::new(2, 2, [(CubeId::new(2, &[0, 0]).unwrap(), 1.0)]).unwrap();
        assert!(sparse.restrict(&q).is_empty());
    }

    #[test]
    fn ball_mass_examples() {
        let m = full_lebesgue(2, 4);
        assert_eq!(m.ball_mass(&[0.3, 0.9], 2f64.sqrt()), m.total_mass());
        let z = GridMeasure::zero(2, 4).unwrap();
        assert_eq!(z.ball_mass(&[0.5, 0.5], 0.3), 0.0);
        // r = δ/2 at a cell center: the cell and its 4 edge neighbours (at
        // distance exactly δ/2); diagonal neighbours sit at δ/√2 > δ/2
        let d = 1.0 / 16.0;
        let c = [(5.0 + 0.5) * d, (9.0 + 0.5) * d];
        let got = m.ball_mass(&c, d / 2.0);
        assert_eq!(got, 5.0 * d * d);
    }

    #[test]
    fn additivity_of_coarse_masses() {
        let set = GridSet::from_coords(2, 3, [[0u32, 0], [1, 1], [7, 7], [4, 2]]).unwrap();
        let cells = set.iter().enumerate().map(|(i, &c)| (c, 0.1 * (i + 1) as f64));
        let m = GridMeasure::new(2, 3, cells).unwrap();
        let table = m.mass_table();
        for level in 0..3u32 {
            for (q, mass) in &table[level as usize] {
                let direct: f64 = q.children().iter().map(|ch| m.mass_of(ch)).sum();
                assert!((mass - direct).abs() < 1e-15);
            }
        }
        assert!((table[0][&CubeId::root(2).unwrap()] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let set = GridSet::from_coords(2, 3, [[0u32, 0], [2, 5]]).unwrap();
        let m = GridMeasure::new(2, 3, set.iter().map(|&c| (c, 1.0 / 3.0))).unwrap();
        let text = m.to_text();
        assert!(text.contains("0 0 3.3333333333333331e-1"));
        assert_eq!(GridMeasure::from_text(&text).unwrap(), m);
    }

    #[test]
    fn rejects_negative_mass_and_duplicates() {
        let c = CubeId::new(1, &[0, 0]).unwrap();
        assert!(GridMeasure::new(2, 1, [(c, -1.0)]).is_err());
        assert!(GridMeasure::new(2, 1, [(c, 1.0), (c, 2.0)]).is_err());
    }
}
