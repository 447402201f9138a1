//! Test-set generators (digit-restriction IFS, fractal percolation, product
//! Cantor sets) and the discrete sumset-coverage experiment on the line.

pub mod rng;

use serde::{Deserialize, Serialize};

use crate::dyadic::{check_dim, dyadic_content, CubeId, GridSet, MAX_LEVEL};
use crate::error::{Error, Result};
use rng::CounterRng;

/// Allowed children per level, cycled when shorter than the depth.
///
/// A child index `b` selects the upper half along axis `i` when bit `n-1-i`
/// is set, so the digit string `"01"` (axis 0 digit 0, axis 1 digit 1) is
/// child 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigitPattern {
    pub dim: usize,
    pub levels: Vec<Vec<usize>>,
}

impl DigitPattern {
    /// The same child subset at every level.
    pub fn self_similar(dim: usize, children: Vec<usize>) -> Result<Self> {
        let p = DigitPattern {
            dim,
            levels: vec![children],
        };
        p.validate()?;
        Ok(p)
    }

    /// Parse digit strings such as `["00", "01", "10"]`.
    pub fn from_digit_strings<S: AsRef<str>>(dim: usize, digits: &[S]) -> Result<Self> {
        let children = digits
            .iter()
            .map(|d| {
                let d = d.as_ref();
                if d.len() != dim || !d.bytes().all(|b| b == b'0' || b == b'1') {
                    return Err(Error::InvalidArgument(format!(
                        "digit string `{d}` must have {dim} binary digits"
                    )));
                }
                Ok(usize::from_str_radix(d, 2).expect("validated binary"))
            })
            .collect::<Result<Vec<_>>>()?;
        DigitPattern::self_similar(dim, children)
    }

    pub fn full(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        DigitPattern::self_similar(dim, (0..1 << dim).collect())
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.dim)?;
        if self.levels.is_empty() {
            return Err(Error::InvalidArgument("digit pattern has no levels".into()));
        }
        for (k, subset) in self.levels.iter().enumerate() {
            if subset.is_empty() {
                return Err(Error::InvalidArgument(format!("empty child subset at level {k}")));
            }
            if let Some(b) = subset.iter().find(|&&b| b >= 1 << self.dim) {
                return Err(Error::InvalidArgument(format!("child index {b} out of range")));
            }
        }
        Ok(())
    }

    fn subset(&self, k: usize) -> Vec<usize> {
        let mut s = self.levels[k % self.levels.len()].clone();
        s.sort_unstable();
        s.dedup();
        s
    }
}

fn check_depth(depth: u32) -> Result<()> {
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    if depth > MAX_LEVEL {
        return Err(Error::LevelTooDeep(depth));
    }
    Ok(())
}

/// Cells reachable by picking an allowed child at each of `depth` levels.
pub fn generate_ifs(pattern: &DigitPattern, depth: u32) -> Result<GridSet> {
    pattern.validate()?;
    check_depth(depth)?;
    let mut cells = vec![CubeId::root(pattern.dim)?];
    for k in 0..depth as usize {
        let subset = pattern.subset(k);
        cells = cells
            .iter()
            .flat_map(|c| subset.iter().map(move |&b| c.child(b)))
            .collect();
    }
    GridSet::new(pattern.dim, depth, cells)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PercolationSpec {
    pub dim: usize,
    /// Retention probability of each child.
    pub p: f64,
    pub depth: u32,
    pub seed: u64,
}

/// Mandelbrot fractal percolation: each child of a retained cube survives
/// independently with probability `p`.
pub fn generate_percolation(spec: &PercolationSpec) -> Result<GridSet> {
    check_dim(spec.dim)?;
    check_depth(spec.depth)?;
    if !(0.0..=1.0).contains(&spec.p) {
        return Err(Error::InvalidArgument(format!("retention probability {} outside [0, 1]", spec.p)));
    }
    let rng = CounterRng::new(spec.seed);
    let n = spec.dim;
    let mut key = vec![0u64; n + 1];
    let mut cells = vec![CubeId::root(n)?];
    for _ in 0..spec.depth {
        let mut next = Vec::with_capacity(cells.len() * (1 << n));
        for c in &cells {
            for b in 0..1usize << n {
                let child = c.child(b);
                key[0] = child.level() as u64;
                for (k, &x) in key[1..].iter_mut().zip(child.coords()) {
                    *k = x as u64;
                }
                if rng.uniform(&key) < spec.p {
                    next.push(child);
                }
            }
        }
        cells = next;
    }
    GridSet::new(n, spec.depth, cells)
}

/// Product of per-axis digit-restriction Cantor sets.
pub fn generate_product_cantor(axes: &[Vec<u32>], depth: u32) -> Result<GridSet> {
    let n = axes.len();
    check_dim(n)?;
    check_depth(depth)?;
    for (i, digits) in axes.iter().enumerate() {
        if digits.is_empty() {
            return Err(Error::InvalidArgument(format!("empty digit subset on axis {i}")));
        }
        if digits.iter().any(|&d| d > 1) {
            return Err(Error::InvalidArgument(format!("axis {i} digits must be 0 or 1")));
        }
    }
    let per_axis: Vec<Vec<u32>> = axes
        .iter()
        .map(|digits| {
            let mut coords = vec![0u32];
            for _ in 0..depth {
                coords = coords.iter().flat_map(|&c| digits.iter().map(move |&d| 2 * c + d)).collect();
            }
            coords.sort_unstable();
            coords.dedup();
            coords
        })
        .collect();
    let mut tuples: Vec<Vec<u32>> = vec![Vec::new()];
    for coords in &per_axis {
        tuples = tuples
            .iter()
            .flat_map(|t| {
                coords.iter().map(move |&c| {
                    let mut t = t.clone();
                    t.push(c);
                    t
                })
            })
            .collect();
    }
    GridSet::from_coords(n, depth, tuples)
}

#[derive(Clone, Debug)]
pub struct SumsetCoverage {
    /// Resolution cells of the domain not contained in `∪_q (Ē + q)`.
    pub uncovered: GridSet,
    /// Dyadic content of the uncovered cells at the requested exponent.
    pub content: f64,
    /// Each shift with its snapped grid offset (in resolution cells).
    pub snapped: Vec<(f64, i64)>,
}

/// Cover a domain `[lo, hi) ⊆ [0,1)` by translates of a set on the line.
///
/// Shifts are snapped to the nearest multiple of `2^-resolution`. Cells are
/// treated as closed; since `Ē + q` is then a union of closed resolution
/// cells, a resolution cell is covered exactly when it is one of them.
pub fn sumset_coverage(
    set: &GridSet,
    shifts: &[f64],
    domain: (f64, f64),
    resolution: u32,
    s: f64,
) -> Result<SumsetCoverage> {
    if set.dim() != 1 {
        return Err(Error::GridMismatch("sumset coverage needs a set on the line".into()));
    }
    if resolution < set.level() || resolution > 24 {
        return Err(Error::InvalidArgument(format!(
            "resolution {resolution} must lie in [{}, 24]",
            set.level()
        )));
    }
    let (lo, hi) = domain;
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(Error::InvalidArgument(format!("domain [{lo}, {hi}) must be a subinterval of [0, 1)")));
    }
    let scale = (resolution as f64).exp2();
    let size = 1i64 << resolution;
    let refine = 1i64 << (resolution - set.level());
    let mut in_set = vec![false; size as usize];
    for c in set.iter() {
        let j = c.coords()[0] as i64;
        for i in j * refine..(j + 1) * refine {
            in_set[i as usize] = true;
        }
    }
    let snapped: Vec<(f64, i64)> = shifts.iter().map(|&q| (q, (q * scale).round() as i64)).collect();
    let first = (lo * scale).floor() as i64;
    let last = ((hi * scale).ceil() as i64).min(size);
    let mut uncovered = Vec::new();
    for i in first..last {
        let covered = snapped.iter().any(|&(_, off)| {
            let j = i - off;
            (0..size).contains(&j) && in_set[j as usize]
        });
        if !covered {
            uncovered.push(CubeId::new(resolution, &[i as u32])?);
        }
    }
    let uncovered = GridSet::new(1, resolution, uncovered)?;
    let content = dyadic_content(&uncovered, s, &CubeId::root(1)?)?;
    Ok(SumsetCoverage {
        uncovered,
        content,
        snapped,
    })
}
