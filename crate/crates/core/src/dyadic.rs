//! Dyadic cubes, finite unions of same-level cubes, and dyadic Hausdorff content.
//!
//! A cube at level `k` with integer coordinates `z` is the half-open box
//! `2^-k ([0,1)^n + z)`. Closures are only used by the geometric tests in
//! [`crate::visibility`] and [`crate::measures::GridMeasure::ball_mass`].

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 4;
/// Deepest supported level; coordinates are stored as `u32`.
pub const MAX_LEVEL: u32 = 30;

/// A dyadic cube identified by its level and integer coordinates.
///
/// Ordering is by level, then lexicographically by coordinates.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "CubeRepr", into = "CubeRepr")]
pub struct CubeId {
    level: u32,
    dim: u8,
    coords: [u32; MAX_DIM],
}

#[derive(Serialize, Deserialize)]
struct CubeRepr {
    level: u32,
    coords: Vec<u32>,
}

impl TryFrom<CubeRepr> for CubeId {
    type Error = Error;

    fn try_from(r: CubeRepr) -> Result<Self> {
        CubeId::new(r.level, &r.coords)
    }
}

impl From<CubeId> for CubeRepr {
    fn from(c: CubeId) -> Self {
        CubeRepr {
            level: c.level,
            coords: c.coords().to_vec(),
        }
    }
}

impl std::fmt::Debug for CubeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {:?})", self.level, self.coords())
    }
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::UnsupportedDimension(dim));
    }
    Ok(())
}

/// `2^-level`, exact.
#[inline]
pub fn side_at(level: u32) -> f64 {
    (-(level as f64)).exp2()
}

impl CubeId {
    pub fn new(level: u32, coords: &[u32]) -> Result<Self> {
        check_dim(coords.len())?;
        if level > MAX_LEVEL {
            return Err(Error::LevelTooDeep(level));
        }
        let bound = 1u64 << level;
        if let Some(c) = coords.iter().find(|&&c| c as u64 >= bound) {
            return Err(Error::InvalidCube(format!(
                "coordinate {c} outside [0, 2^{level})"
            )));
        }
        let mut packed = [0u32; MAX_DIM];
        packed[..coords.len()].copy_from_slice(coords);
        Ok(CubeId {
            level,
            dim: coords.len() as u8,
            coords: packed,
        })
    }

    /// The unit cube `[0,1)^n`.
    pub fn root(dim: usize) -> Result<Self> {
        CubeId::new(0, &vec![0; dim])
    }

    #[inline]
    pub fn level(&self) -> u32 {
        self.level
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[u32] {
        &self.coords[..self.dim as usize]
    }

    #[inline]
    pub fn side(&self) -> f64 {
        side_at(self.level)
    }

    /// `side^s`, computed as `2^(-level * s)`.
    #[inline]
    pub fn side_pow(&self, s: f64) -> f64 {
        (-(self.level as f64) * s).exp2()
    }

    /// Lebesgue measure `side^n`.
    #[inline]
    pub fn volume(&self) -> f64 {
        side_at(self.level * self.dim as u32)
    }

    pub fn lower_corner(&self) -> Vec<f64> {
        let h = self.side();
        self.coords().iter().map(|&c| c as f64 * h).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        let h = self.side();
        self.coords().iter().map(|&c| (c as f64 + 0.5) * h).collect()
    }

    /// Bounds `[lo, hi]` of the closed cube along `axis`.
    #[inline]
    pub fn bounds(&self, axis: usize) -> (f64, f64) {
        let h = self.side();
        let c = self.coords[axis] as f64;
        (c * h, (c + 1.0) * h)
    }

    /// The `2^n` children in lexicographic coordinate order.
    pub fn children(&self) -> Vec<CubeId> {
        let n = self.dim();
        (0..1usize << n).map(|b| self.child(b)).collect()
    }

    /// Child number `b`; bit `n-1-i` of `b` selects the upper half along axis `i`.
    #[inline]
    pub fn child(&self, b: usize) -> CubeId {
        let n = self.dim();
        let mut coords = [0u32; MAX_DIM];
        for i in 0..n {
            coords[i] = 2 * self.coords[i] + ((b >> (n - 1 - i)) & 1) as u32;
        }
        CubeId {
            level: self.level + 1,
            dim: self.dim,
            coords,
        }
    }

    pub fn parent(&self) -> Option<CubeId> {
        (self.level > 0).then(|| self.ancestor_unchecked(self.level - 1))
    }

    /// The unique cube at `level` containing `self`.
    pub fn ancestor(&self, level: u32) -> Result<CubeId> {
        if level > self.level {
            return Err(Error::LevelTooFine {
                requested: level,
                actual: self.level,
            });
        }
        Ok(self.ancestor_unchecked(level))
    }

    #[inline]
    pub(crate) fn ancestor_unchecked(&self, level: u32) -> CubeId {
        let shift = self.level - level;
        let mut coords = self.coords;
        for c in coords.iter_mut().take(self.dim as usize) {
            *c >>= shift;
        }
        CubeId {
            level,
            dim: self.dim,
            coords,
        }
    }

    /// Whether `other` is a (non-strict) dyadic descendant of `self`.
    pub fn contains(&self, other: &CubeId) -> bool {
        other.dim == self.dim
            && other.level >= self.level
            && other.ancestor_unchecked(self.level) == *self
    }

    /// Squared Euclidean distance from `p` to the closed cube.
    pub fn dist2_to_point(&self, p: &[f64]) -> f64 {
        let mut d2 = 0.0;
        for (axis, &x) in p.iter().enumerate().take(self.dim()) {
            let (lo, hi) = self.bounds(axis);
            let d = if x < lo {
                lo - x
            } else if x > hi {
                x - hi
            } else {
                0.0
            };
            d2 += d * d;
        }
        d2
    }

    /// Interleaved bit key, coarse bits first. Sorting by this key groups every
    /// dyadic subtree into a contiguous run.
    pub(crate) fn morton_key(&self) -> u128 {
        let n = self.dim();
        let mut key = 0u128;
        for bit in (0..self.level).rev() {
            for i in 0..n {
                key = (key << 1) | ((self.coords[i] >> bit) & 1) as u128;
            }
        }
        key
    }
}

/// A finite union of distinct dyadic cubes at one level.
///
/// Cells are kept sorted lexicographically.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GridSet {
    dim: usize,
    level: u32,
    cells: Vec<CubeId>,
}

impl GridSet {
    pub fn new(dim: usize, level: u32, cells: impl IntoIterator<Item = CubeId>) -> Result<Self> {
        check_dim(dim)?;
        if level > MAX_LEVEL {
            return Err(Error::LevelTooDeep(level));
        }
        let mut cells: Vec<CubeId> = cells.into_iter().collect();
        if let Some(c) = cells
            .iter()
            .find(|c| c.level != level || c.dim() != dim)
        {
            return Err(Error::GridMismatch(format!(
                "cell {c:?} is not a level-{level} cube in dimension {dim}"
            )));
        }
        cells.sort_unstable();
        cells.dedup();
        Ok(GridSet { dim, level, cells })
    }

    /// Build from raw coordinate tuples.
    pub fn from_coords<I, C>(dim: usize, level: u32, coords: I) -> Result<Self>
    where
        I: IntoIterator<Item = C>,
        C: AsRef<[u32]>,
    {
        let cells = coords
            .into_iter()
            .map(|c| CubeId::new(level, c.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        GridSet::new(dim, level, cells)
    }

    pub(crate) fn from_sorted_unchecked(dim: usize, level: u32, cells: Vec<CubeId>) -> Self {
        debug_assert!(cells.windows(2).all(|w| w[0] < w[1]));
        GridSet { dim, level, cells }
    }

    pub fn empty(dim: usize, level: u32) -> Result<Self> {
        GridSet::new(dim, level, std::iter::empty())
    }

    /// Every level-`level` cube of `[0,1)^dim`.
    pub fn full(dim: usize, level: u32) -> Result<Self> {
        check_dim(dim)?;
        let side = 1u64 << level;
        let total = side.checked_pow(dim as u32).filter(|&t| t <= 1 << 28).ok_or_else(|| {
            Error::InvalidArgument(format!("full grid at level {level} in dimension {dim} is too large"))
        })?;
        let cells = (0..total).map(|mut idx| {
            let mut coords = [0u32; MAX_DIM];
            for i in (0..dim).rev() {
                coords[i] = (idx % side) as u32;
                idx /= side;
            }
            CubeId {
                level,
                dim: dim as u8,
                coords,
            }
        });
        Ok(GridSet::from_sorted_unchecked(dim, level, cells.collect()))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn level(&self) -> u32 {
        self.level
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    #[inline]
    pub fn cells(&self) -> &[CubeId] {
        &self.cells
    }

    pub fn iter(&self) -> std::slice::Iter<'_, CubeId> {
        self.cells.iter()
    }

    pub fn contains(&self, cell: &CubeId) -> bool {
        self.cells.binary_search(cell).is_ok()
    }

    /// Distinct ancestors at a coarser level.
    pub fn ancestors(&self, level: u32) -> Result<GridSet> {
        if level > self.level {
            return Err(Error::LevelTooFine {
                requested: level,
                actual: self.level,
            });
        }
        let mut cells: Vec<CubeId> = self.cells.iter().map(|c| c.ancestor_unchecked(level)).collect();
        cells.sort_unstable();
        cells.dedup();
        Ok(GridSet::from_sorted_unchecked(self.dim, level, cells))
    }

    /// The cells contained in `q`.
    pub fn within(&self, q: &CubeId) -> GridSet {
        let cells = self.cells.iter().filter(|c| q.contains(c)).copied().collect();
        GridSet::from_sorted_unchecked(self.dim, self.level, cells)
    }

    pub fn is_subset(&self, other: &GridSet) -> bool {
        self.level == other.level && self.cells.iter().all(|c| other.contains(c))
    }

    /// Text form: header `n J`, then one sorted line of coordinates per cell.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.dim, self.level);
        for c in &self.cells {
            let line: Vec<String> = c.coords().iter().map(u32::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = data_lines(text);
        let (dim, level) = parse_header(lines.next())?;
        let mut cells = Vec::new();
        for (lineno, line) in lines {
            let coords = parse_u32s(line, lineno)?;
            if coords.len() != dim {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected {dim} coordinates, found {}", coords.len()),
                });
            }
            cells.push(CubeId::new(level, &coords).map_err(|e| Error::Parse {
                line: lineno,
                msg: e.to_string(),
            })?);
        }
        GridSet::new(dim, level, cells)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        GridSet::from_text(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// Non-empty lines with their 1-based line numbers.
pub(crate) fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub(crate) fn parse_header(line: Option<(usize, &str)>) -> Result<(usize, u32)> {
    let (lineno, line) = line.ok_or(Error::Parse {
        line: 1,
        msg: "missing `n J` header".into(),
    })?;
    let parts = parse_u32s(line, lineno)?;
    if parts.len() != 2 {
        return Err(Error::Parse {
            line: lineno,
            msg: "header must be `n J`".into(),
        });
    }
    let dim = parts[0] as usize;
    check_dim(dim)?;
    if parts[1] > MAX_LEVEL {
        return Err(Error::LevelTooDeep(parts[1]));
    }
    Ok((dim, parts[1]))
}

fn parse_u32s(line: &str, lineno: usize) -> Result<Vec<u32>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<u32>().map_err(|e| Error::Parse {
                line: lineno,
                msg: format!("`{t}`: {e}"),
            })
        })
        .collect()
}

pub(crate) fn check_exponent(s: f64, n: usize) -> Result<()> {
    if !(s.is_finite() && (0.0..=n as f64).contains(&s)) {
        return Err(Error::InvalidExponent {
            s,
            range: format!("[0, {n}]"),
        });
    }
    Ok(())
}

/// Optimal dyadic-cover costs for every occupied cube at every level.
///
/// `value(Q) = min(side(Q)^s, sum of children values)`, with `side^s` at
/// occupied finest cells and `0` on cubes disjoint from the set. Children are
/// summed in lexicographic order.
#[derive(Clone, Debug)]
pub struct ContentTable {
    levels: Vec<BTreeMap<CubeId, f64>>,
}

impl ContentTable {
    pub fn build(set: &GridSet, s: f64) -> Result<Self> {
        check_exponent(s, set.dim())?;
        let fine = set.level();
        let mut levels: Vec<BTreeMap<CubeId, f64>> = Vec::with_capacity(fine as usize + 1);
        let leaf_cost = (-(fine as f64) * s).exp2();
        let finest: BTreeMap<CubeId, f64> = set.iter().map(|&c| (c, leaf_cost)).collect();
        levels.push(finest);
        for level in (0..fine).rev() {
            let own = (-(level as f64) * s).exp2();
            let below = levels.last().expect("finest level present");
            let mut sums: BTreeMap<CubeId, f64> = BTreeMap::new();
            for (child, &v) in below {
                *sums.entry(child.ancestor_unchecked(level)).or_insert(0.0) += v;
            }
            for v in sums.values_mut() {
                *v = own.min(*v);
            }
            levels.push(sums);
        }
        levels.reverse();
        Ok(ContentTable { levels })
    }

    /// Content of `set ∩ q` using covers by dyadic subcubes of `q`.
    pub fn get(&self, q: &CubeId) -> f64 {
        self.levels
            .get(q.level() as usize)
            .and_then(|m| m.get(q))
            .copied()
            .unwrap_or(0.0)
    }

    /// Occupied cubes with their values, coarse levels first.
    pub fn iter(&self) -> impl Iterator<Item = (&CubeId, f64)> {
        self.levels.iter().flat_map(|m| m.iter().map(|(c, &v)| (c, v)))
    }
}

/// Minimal `sum side(Q_i)^s` over covers of `set ∩ root` by dyadic subcubes
/// of `root` no finer than the set's level.
pub fn dyadic_content(set: &GridSet, s: f64, root: &CubeId) -> Result<f64> {
    check_exponent(s, set.dim())?;
    if root.dim() != set.dim() {
        return Err(Error::GridMismatch(format!(
            "root has dimension {}, set has {}",
            root.dim(),
            set.dim()
        )));
    }
    if root.level() > set.level() {
        return Err(Error::LevelTooFine {
            requested: root.level(),
            actual: set.level(),
        });
    }
    let local = set.within(root);
    if local.is_empty() {
        return Ok(0.0);
    }
    Ok(ContentTable::build(&local, s)?.get(root))
}
