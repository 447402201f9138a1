//! Lines parallel to a direction, visible parts of grid sets, and the
//! good/bad line machinery.
//!
//! Orientation: a visible cell maximizes `x·e` on its fiber, i.e. it is the
//! first cell met when walking in from `+∞·e`.

mod geometry;
mod lines;

pub use geometry::Footprint;
pub use lines::{
    badline_mass_audit, badline_projection_content, classify_lines, good_line_cover_check, tube_stack_counts,
    AuditReport, AuditViolation, CoverReport, Label, LineClassification, LineRecord, ProjectionContent,
};

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dyadic::{CubeId, GridSet};
use crate::error::{Error, Result};
use crate::transforms::Direction;

/// The scale ladder `δ = 2^{-J}`, `δ^ε = 2^{-J_c}` and the thresholds built
/// from it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Scales {
    pub n: usize,
    pub fine: u32,
    pub coarse: u32,
    pub epsilon: f64,
}

impl Scales {
    pub fn delta(&self) -> f64 {
        (-(self.fine as f64)).exp2()
    }

    /// `δ^{n+ε}`: minimum mass of a heavy δ-cube.
    pub fn heavy_threshold(&self) -> f64 {
        self.delta().powf(self.n as f64 + self.epsilon)
    }

    /// `δ^{2ε−1}`: height of a stack that makes a line bad.
    pub fn stack_threshold(&self) -> f64 {
        self.delta().powf(2.0 * self.epsilon - 1.0)
    }

    /// `δ^{−ε(n+1)}`: directional energy marking an exceptional direction.
    pub fn energy_threshold(&self) -> f64 {
        self.delta().powf(-self.epsilon * (self.n as f64 + 1.0))
    }
}

/// A line `{lift(base) + t·e}` of a [`LineNet`]; the direction is the net's.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Line {
    pub index: Vec<i64>,
    pub base: Vec<f64>,
}

/// The slab of lines whose frame coordinates lie in one closed δ-cell of
/// `e^⊥`, identified by the cell's integer index.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Tube {
    pub cell: Vec<i64>,
}

/// Lines parallel to `e` with bases at the centers of the level-`L` cells of
/// the frame grid on `e^⊥` that meet the projected unit cube.
#[derive(Clone, Debug)]
pub struct LineNet {
    direction: Direction,
    level: u32,
    lo: Vec<i64>,
    counts: Vec<usize>,
}

/// Interval of frame coordinate `k` covered by the projected unit cube.
fn projected_unit_cube(e: &Direction, k: usize) -> (f64, f64) {
    let f = &e.frame()[k];
    let lo = f.iter().map(|x| x.min(0.0)).sum();
    let hi = f.iter().map(|x| x.max(0.0)).sum();
    (lo, hi)
}

impl LineNet {
    pub fn new(direction: &Direction, level: u32) -> Result<LineNet> {
        if level > 26 {
            return Err(Error::LevelTooDeep(level));
        }
        let side = (-(level as f64)).exp2();
        let mut lo = Vec::new();
        let mut counts = Vec::new();
        for k in 0..direction.dim() - 1 {
            let (a, b) = projected_unit_cube(direction, k);
            let first = (a / side).floor() as i64;
            let last = ((b / side).ceil() as i64).max(first + 1);
            lo.push(first);
            counts.push((last - first) as usize);
        }
        Ok(LineNet {
            direction: direction.clone(),
            level,
            lo,
            counts,
        })
    }

    pub fn direction(&self) -> &Direction {
        &self.direction
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn side(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, flat: usize) -> Vec<i64> {
        let mut rest = flat;
        let mut idx = vec![0; self.counts.len()];
        for k in (0..self.counts.len()).rev() {
            idx[k] = self.lo[k] + (rest % self.counts[k]) as i64;
            rest /= self.counts[k];
        }
        idx
    }

    pub fn base(&self, flat: usize) -> Vec<f64> {
        self.index(flat)
            .iter()
            .map(|&z| (z as f64 + 0.5) * self.side())
            .collect()
    }

    pub fn line(&self, flat: usize) -> Line {
        Line {
            index: self.index(flat),
            base: self.base(flat),
        }
    }

    pub fn lines(&self) -> impl Iterator<Item = Line> + '_ {
        (0..self.len()).map(|i| self.line(i))
    }

    /// Lines whose base lies in the closed box `[lo, hi]` of frame
    /// coordinates, as flat indices in increasing order.
    pub fn candidates(&self, lo: &[f64], hi: &[f64]) -> Vec<usize> {
        let side = self.side();
        let mut ranges = Vec::with_capacity(self.counts.len());
        for k in 0..self.counts.len() {
            let a = ((lo[k] / side - 0.5).ceil() as i64).max(self.lo[k]);
            let b = ((hi[k] / side - 0.5).floor() as i64).min(self.lo[k] + self.counts[k] as i64 - 1);
            if a > b {
                return Vec::new();
            }
            ranges.push(((a - self.lo[k]) as usize, (b - self.lo[k]) as usize));
        }
        let mut out = vec![0usize];
        for (k, &(a, b)) in ranges.iter().enumerate() {
            out = out
                .iter()
                .flat_map(|&f| (a..=b).map(move |z| f * self.counts[k] + z))
                .collect();
        }
        out
    }
}

/// Cells maximizing `sign·coordinate` along `axis` within each nonempty
/// column.
pub fn visible_cells_axis(set: &GridSet, axis: usize, sign: i32) -> Result<GridSet> {
    if axis >= set.dim() {
        return Err(Error::InvalidArgument(format!("axis {axis} out of range for n = {}", set.dim())));
    }
    let mut best: BTreeMap<Vec<u32>, u32> = BTreeMap::new();
    for c in set.iter() {
        let mut key = c.coords().to_vec();
        let x = key.remove(axis);
        best.entry(key)
            .and_modify(|b| {
                if (sign >= 0 && x > *b) || (sign < 0 && x < *b) {
                    *b = x;
                }
            })
            .or_insert(x);
    }
    let cells = best
        .into_iter()
        .map(|(mut key, x)| {
            key.insert(axis, x);
            CubeId::new(set.level(), &key)
        })
        .collect::<Result<Vec<_>>>()?;
    GridSet::new(set.dim(), set.level(), cells)
}

/// Parameter interval `[t_min, t_max]` where `p + t·e` meets the closed cube.
pub(crate) fn ray_interval(p: &[f64], e: &[f64], cube: &CubeId) -> Option<(f64, f64)> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (i, (&pi, &ei)) in p.iter().zip(e).enumerate() {
        let (a, b) = cube.bounds(i);
        if ei == 0.0 {
            if pi < a || pi > b {
                return None;
            }
        } else {
            let t1 = (a - pi) / ei;
            let t2 = (b - pi) / ei;
            lo = lo.max(t1.min(t2));
            hi = hi.min(t1.max(t2));
        }
    }
    (lo <= hi).then_some((lo, hi))
}

/// Ray-cast every line of the level-`net_level` net from the `+∞·e` side and
/// keep the first closed cell hit. Ties go to the larger exit parameter, then
/// the larger entry parameter, then the larger cell.
pub fn visible_cells_general(set: &GridSet, e: &Direction, net_level: u32) -> Result<GridSet> {
    if e.dim() != set.dim() {
        return Err(Error::GridMismatch(format!("set in R^{} vs direction in R^{}", set.dim(), e.dim())));
    }
    if net_level < set.level() {
        return Err(Error::InvalidArgument(format!(
            "line net level {net_level} is coarser than the set level {}",
            set.level()
        )));
    }
    Direction::from_parts(e.e().to_vec(), e.frame().to_vec())?;
    let net = LineNet::new(e, net_level)?;
    let mut best: Vec<Option<(f64, f64, CubeId)>> = vec![None; net.len()];
    for cell in set.iter() {
        let fp = Footprint::bounding(cell, e);
        for flat in net.candidates(&fp.0, &fp.1) {
            let p = e.lift(&net.base(flat));
            if let Some((t0, t1)) = ray_interval(&p, e.e(), cell) {
                let better = match &best[flat] {
                    None => true,
                    Some((b1, b0, bc)) => t1
                        .total_cmp(b1)
                        .then(t0.total_cmp(b0))
                        .then(cell.cmp(bc))
                        .is_gt(),
                };
                if better {
                    best[flat] = Some((t1, t0, *cell));
                }
            }
        }
    }
    let cells: Vec<CubeId> = best.into_iter().flatten().map(|b| b.2).collect();
    GridSet::new(set.dim(), set.level(), cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractals::{generate_percolation, PercolationSpec};

    #[test]
    fn axis_examples() {
        let one = GridSet::from_coords(2, 3, [[2, 5]]).unwrap();
        assert_eq!(visible_cells_axis(&one, 0, 1).unwrap(), one);

        let full = GridSet::full(2, 3).unwrap();
        let v = visible_cells_axis(&full, 0, 1).unwrap();
        assert_eq!(v.len(), 8);
        assert!(v.iter().all(|c| c.coords()[0] == 7));

        let s = GridSet::from_coords(2, 2, [[0, 0], [0, 3], [2, 1]]).unwrap();
        let v = visible_cells_axis(&s, 1, 1).unwrap();
        assert_eq!(v, GridSet::from_coords(2, 2, [[0, 3], [2, 1]]).unwrap());
        let v = visible_cells_axis(&s, 1, -1).unwrap();
        assert_eq!(v, GridSet::from_coords(2, 2, [[0, 0], [2, 1]]).unwrap());
        assert!(visible_cells_axis(&s, 2, 1).is_err());
    }

    #[test]
    fn occlusion_monotonicity() {
        let s = GridSet::from_coords(2, 3, [[1, 2], [4, 6]]).unwrap();
        let later = GridSet::from_coords(2, 3, [[1, 2], [4, 6], [1, 5]]).unwrap();
        let v = visible_cells_axis(&later, 1, 1).unwrap();
        assert!(!v.contains(&CubeId::new(3, &[1, 2]).unwrap()));
        assert!(visible_cells_axis(&s, 1, 1).unwrap().contains(&CubeId::new(3, &[1, 2]).unwrap()));
    }

    #[test]
    fn net_covers_projected_cube() {
        let e = Direction::from_angle(0.6);
        let net = LineNet::new(&e, 5).unwrap();
        let (a, b) = projected_unit_cube(&e, 0);
        let first = net.base(0)[0];
        let last = net.base(net.len() - 1)[0];
        assert!(first - net.side() / 2.0 <= a && last + net.side() / 2.0 >= b);
        assert_eq!(net.candidates(&[a - 1.0], &[b + 1.0]).len(), net.len());
        let c = net.candidates(&[0.1], &[0.2]);
        assert!(c.iter().all(|&f| (0.1..=0.2).contains(&net.base(f)[0])));
        assert_eq!(c.len(), 3);
    }

    #[test]
    fn general_single_cell_and_occlusion() {
        let one = GridSet::from_coords(2, 4, [[3, 9]]).unwrap();
        for theta in [0.0, 0.4, 2.9, 5.0] {
            let e = Direction::from_angle(theta);
            assert_eq!(visible_cells_general(&one, &e, 6).unwrap(), one);
        }
        // centers differ by 3δ·(1,1)
        let pair = GridSet::from_coords(2, 4, [[2, 2], [5, 5]]).unwrap();
        let e = Direction::new(&[1.0, 1.0]).unwrap();
        let v = visible_cells_general(&pair, &e, 6).unwrap();
        assert_eq!(v.cells(), &[CubeId::new(4, &[5, 5]).unwrap()]);
        let v = visible_cells_general(&pair, &e.negated(), 6).unwrap();
        assert_eq!(v.cells(), &[CubeId::new(4, &[2, 2]).unwrap()]);
        assert!(visible_cells_general(&pair, &e, 3).is_err());
    }

    #[test]
    fn general_matches_axis_oracle() {
        for seed in 0..5 {
            let set = generate_percolation(&PercolationSpec {
                dim: 2,
                p: 0.7,
                depth: 5,
                seed,
            })
            .unwrap();
            for axis in 0..2 {
                for sign in [1, -1] {
                    let e = Direction::axis(2, axis, sign).unwrap();
                    assert_eq!(
                        visible_cells_general(&set, &e, 7).unwrap(),
                        visible_cells_axis(&set, axis, sign).unwrap(),
                        "seed {seed} axis {axis} sign {sign}"
                    );
                }
            }
        }
        let set = generate_percolation(&PercolationSpec {
            dim: 3,
            p: 0.6,
            depth: 3,
            seed: 4,
        })
        .unwrap();
        for axis in 0..3 {
            let e = Direction::axis(3, axis, 1).unwrap();
            assert_eq!(
                visible_cells_general(&set, &e, 5).unwrap(),
                visible_cells_axis(&set, axis, 1).unwrap()
            );
        }
    }

    #[test]
    fn thresholds() {
        let sc = Scales {
            n: 2,
            fine: 10,
            coarse: 2,
            epsilon: 0.2,
        };
        assert_eq!(sc.delta(), 2f64.powi(-10));
        assert!((sc.heavy_threshold().log2() + 22.0).abs() < 1e-12);
        assert!((sc.stack_threshold().log2() - 6.0).abs() < 1e-12);
        assert!((sc.energy_threshold().log2() - 6.0).abs() < 1e-12);
    }
}
