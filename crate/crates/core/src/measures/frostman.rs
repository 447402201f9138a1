//! Frostman measures with dyadic upper and lower bounds.
//!
//! Construction, for a set `E` discretized at `δ = 2^-J` and exponent `s`:
//!
//! 1. `μ^0` puts mass `δ^s` on each occupied finest cell.
//! 2. For `k = 0..J-1`, every occupied cube `Q` at level `J-k-1` with
//!    `μ^k(Q) > ℓ(Q)^s` is rescaled. Let `G` be the maximal dyadic subcubes
//!    `Q' ⊆ Q` (down to the finest level) with `μ^k(Q') <= |Q'|/2`. Masses in
//!    `G` are kept; masses in `B = Q \ G` are multiplied by
//!    `ℓ(Q)^s / (2 μ^k(Q))`. Equality `μ^k(Q) = ℓ(Q)^s` does not trigger.
//! 3. The result is `μ^J`.
//!
//! The output satisfies `μ(Q) <= ℓ(Q)^s` for every dyadic `Q` and
//! `μ(Q) >= a_n min{content(E ∩ Q), |Q|}`.

use std::collections::BTreeMap;

use serde::Serialize;

use super::GridMeasure;
use crate::dyadic::{check_exponent, side_at, ContentTable, CubeId, GridSet};
use crate::error::{Error, Result};
use crate::fractals::rng::CounterRng;

/// Relative arithmetic slack allowed when checking exact inequalities.
pub const REL_SLACK: f64 = 1e-12;

/// Exponent and lower-bound constants for the construction.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FrostmanParams {
    pub n: usize,
    pub s: f64,
    /// Constant in the verified lower bound.
    pub a_n: f64,
    /// `(1/4) diam([0,1]^n)^-n = (1/4) n^(-n/2)`.
    pub b_n: f64,
}

impl FrostmanParams {
    pub fn new(n: usize, s: f64) -> Result<Self> {
        check_exponent(s, n)?;
        let b_n = 0.25 * (n as f64).powf(-(n as f64) / 2.0);
        Ok(FrostmanParams {
            n,
            s,
            a_n: default_lower_constant(n),
            b_n,
        })
    }
}

/// Conservative lower-bound constant: `b_n · 2^(-n-1) · 8^(-n)`, pinned to
/// `1e-4` in the plane.
pub fn default_lower_constant(n: usize) -> f64 {
    if n == 2 {
        return 1e-4;
    }
    let nf = n as f64;
    0.25 * nf.powf(-nf / 2.0) * (-(nf + 1.0)).exp2() * (-3.0 * nf).exp2()
}

#[derive(Clone, Copy, Debug, Default)]
pub struct FrostmanOptions {
    /// Record one [`TraceEntry`] per occupied cube per step.
    pub trace: bool,
    /// Keep `μ^0, ..., μ^J`.
    pub snapshots: bool,
    /// Record the occupied members of each good family in the trace.
    pub good_family: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceEntry {
    /// Step `k + 1` producing `μ^{k+1}`.
    pub step: u32,
    pub cube: CubeId,
    pub mass_before: f64,
    pub fired: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factor: Option<f64>,
    pub mass_after: f64,
    /// `μ^k(∪G)` when the rescale fired.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub good_mass: Option<f64>,
    /// Occupied members of `G`; empty members carry no mass and are omitted.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub good_cubes: Vec<CubeId>,
}

#[derive(Clone, Debug)]
pub struct FrostmanOutput {
    pub measure: GridMeasure,
    pub trace: Vec<TraceEntry>,
    /// `μ^0, ..., μ^J` when requested.
    pub snapshots: Vec<GridMeasure>,
}

#[derive(Clone, Copy, Debug)]
struct Node {
    cube: CubeId,
    mass: f64,
    first_child: usize,
    n_children: usize,
}

/// Occupied cubes per level, each level in Morton order so that every
/// subtree is a contiguous run.
struct Tree {
    levels: Vec<Vec<Node>>,
}

impl Tree {
    fn build(set: &GridSet, leaf_mass: f64) -> Tree {
        let fine = set.level();
        let mut leaves: Vec<CubeId> = set.cells().to_vec();
        leaves.sort_by_cached_key(CubeId::morton_key);
        let mut levels = vec![leaves
            .into_iter()
            .map(|cube| Node {
                cube,
                mass: leaf_mass,
                first_child: 0,
                n_children: 0,
            })
            .collect::<Vec<_>>()];
        for level in (0..fine).rev() {
            let below = levels.last().expect("nonempty");
            let mut nodes: Vec<Node> = Vec::new();
            for (i, child) in below.iter().enumerate() {
                let parent = child.cube.ancestor_unchecked(level);
                match nodes.last_mut() {
                    Some(p) if p.cube == parent => {
                        p.n_children += 1;
                        p.mass += child.mass;
                    }
                    _ => nodes.push(Node {
                        cube: parent,
                        mass: child.mass,
                        first_child: i,
                        n_children: 1,
                    }),
                }
            }
            levels.push(nodes);
        }
        levels.reverse();
        Tree { levels }
    }

    fn children(&self, level: usize, idx: usize) -> std::ops::Range<usize> {
        let n = &self.levels[level][idx];
        n.first_child..n.first_child + n.n_children
    }

    /// Recompute aggregate masses in the subtree of `(level, idx)`.
    fn resum(&mut self, level: usize, idx: usize) {
        let fine = self.levels.len() - 1;
        let mut ranges = vec![(idx, idx + 1)];
        for l in level..fine {
            let (lo, hi) = *ranges.last().expect("nonempty");
            let first = self.levels[l][lo].first_child;
            let last = &self.levels[l][hi - 1];
            ranges.push((first, last.first_child + last.n_children));
        }
        for l in (level..fine).rev() {
            let (lo, hi) = ranges[l - level];
            for i in lo..hi {
                let kids = self.children(l, i);
                let m: f64 = self.levels[l + 1][kids].iter().map(|c| c.mass).sum();
                self.levels[l][i].mass = m;
            }
        }
    }

    fn to_measure(&self, dim: usize, fine: u32) -> GridMeasure {
        let mut cells: Vec<(CubeId, f64)> = self
            .levels
            .last()
            .map(|leaves| leaves.iter().map(|n| (n.cube, n.mass)).collect())
            .unwrap_or_default();
        cells.sort_unstable_by_key(|c| c.0);
        GridMeasure::from_sorted_unchecked(dim, fine, cells)
    }
}

/// Build `μ_δ` for `set` at exponent `s`.
pub fn frostman_build(set: &GridSet, s: f64) -> Result<GridMeasure> {
    Ok(frostman_build_with(set, s, FrostmanOptions::default())?.measure)
}

pub fn frostman_build_with(set: &GridSet, s: f64, opts: FrostmanOptions) -> Result<FrostmanOutput> {
    check_exponent(s, set.dim())?;
    let dim = set.dim();
    let fine = set.level();
    if set.is_empty() {
        let zero = GridMeasure::zero(dim, fine)?;
        let snapshots = if opts.snapshots {
            vec![zero.clone(); fine as usize + 1]
        } else {
            Vec::new()
        };
        return Ok(FrostmanOutput {
            measure: zero,
            trace: Vec::new(),
            snapshots,
        });
    }

    let mut tree = Tree::build(set, (-(fine as f64) * s).exp2());
    let mut trace = Vec::new();
    let mut snapshots = Vec::new();
    if opts.snapshots {
        snapshots.push(tree.to_measure(dim, fine));
    }

    let fine_idx = fine as usize;
    let mut stack: Vec<(usize, usize)> = Vec::new();
    let mut scaled: Vec<usize> = Vec::new();
    for k in 0..fine {
        let level = (fine - k - 1) as usize;
        let cap = (-(level as f64) * s).exp2();
        // firings below only refreshed their own subtrees
        for idx in 0..tree.levels[level].len() {
            let m: f64 = tree.levels[level + 1][tree.children(level, idx)].iter().map(|c| c.mass).sum();
            tree.levels[level][idx].mass = m;
        }
        for idx in 0..tree.levels[level].len() {
            let node = tree.levels[level][idx];
            let before = node.mass;
            if before <= cap {
                if opts.trace {
                    trace.push(TraceEntry {
                        step: k + 1,
                        cube: node.cube,
                        mass_before: before,
                        fired: false,
                        factor: None,
                        mass_after: before,
                        good_mass: None,
                        good_cubes: Vec::new(),
                    });
                }
                continue;
            }
            let factor = cap / (2.0 * before);
            let mut good_mass = 0.0;
            let mut good_cubes = Vec::new();
            scaled.clear();
            stack.clear();
            stack.push((level, idx));
            while let Some((l, i)) = stack.pop() {
                for c in tree.children(l, i) {
                    let child = &tree.levels[l + 1][c];
                    if child.mass <= 0.5 * child.cube.volume() {
                        good_mass += child.mass;
                        if opts.good_family {
                            good_cubes.push(child.cube);
                        }
                    } else if l + 1 == fine_idx {
                        scaled.push(c);
                    } else {
                        stack.push((l + 1, c));
                    }
                }
            }
            let leaves = &mut tree.levels[fine_idx];
            for &c in &scaled {
                leaves[c].mass *= factor;
            }
            tree.resum(level, idx);
            if opts.trace {
                good_cubes.sort_unstable();
                trace.push(TraceEntry {
                    step: k + 1,
                    cube: node.cube,
                    mass_before: before,
                    fired: true,
                    factor: Some(factor),
                    mass_after: tree.levels[level][idx].mass,
                    good_mass: Some(good_mass),
                    good_cubes,
                });
            }
        }
        if opts.snapshots {
            snapshots.push(tree.to_measure(dim, fine));
        }
    }

    Ok(FrostmanOutput {
        measure: tree.to_measure(dim, fine),
        trace,
        snapshots,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CubeViolation {
    pub cube: CubeId,
    pub lhs: f64,
    pub rhs: f64,
}

/// Deterministic sample of balls with radii in `[δ, √n]`.
#[derive(Clone, Debug)]
pub struct BallSample {
    pub balls: Vec<(Vec<f64>, f64)>,
}

impl BallSample {
    /// `count` balls with uniform centers in `[0,1]^n` and log-uniform radii.
    pub fn seeded(n: usize, fine: u32, count: usize, seed: u64) -> BallSample {
        let rng = CounterRng::new(seed);
        let top = 0.5 * (n as f64).log2();
        let balls = (0..count as u64)
            .map(|i| {
                let center = (0..n as u64).map(|a| rng.uniform(&[i, a])).collect();
                let u = rng.uniform(&[i, n as u64]);
                let r = (-(fine as f64) + u * (fine as f64 + top)).exp2();
                (center, r)
            })
            .collect();
        BallSample { balls }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UpperReport {
    pub s: f64,
    pub cubes_checked: usize,
    /// Largest `μ(Q) / ℓ(Q)^s`.
    pub worst_dyadic_ratio: f64,
    pub worst_cube: Option<CubeId>,
    pub violations: Vec<CubeViolation>,
    pub balls_checked: usize,
    /// `C = 3^n 2^s` in `μ(B(x,r)) <= C r^s`: a ball of radius `r` meets at
    /// most `3^n` dyadic cubes of the side `ℓ ∈ [r, 2r)`.
    pub ball_constant: f64,
    /// Largest `μ(B(x,r)) / r^s`.
    pub worst_ball_ratio: f64,
    pub ball_violations: usize,
}

impl UpperReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.ball_violations == 0
    }
}

/// Check `μ(Q) <= ℓ(Q)^s` on every occupied dyadic cube and the ball bound on
/// a default seeded sample of 256 balls.
pub fn verify_frostman_upper(measure: &GridMeasure, s: f64) -> Result<UpperReport> {
    let sample = BallSample::seeded(measure.dim(), measure.level(), 256, 0x5eed);
    verify_frostman_upper_with(measure, s, &sample)
}

pub fn verify_frostman_upper_with(measure: &GridMeasure, s: f64, sample: &BallSample) -> Result<UpperReport> {
    check_exponent(s, measure.dim())?;
    let mut worst = 0.0f64;
    let mut worst_cube = None;
    let mut violations = Vec::new();
    let mut checked = 0;
    for level in 0..=measure.level() {
        let cap = (-(level as f64) * s).exp2();
        for (q, m) in measure.level_masses(level) {
            checked += 1;
            let ratio = m / cap;
            if ratio > worst {
                worst = ratio;
                worst_cube = Some(q);
            }
            if m > cap * (1.0 + REL_SLACK) {
                violations.push(CubeViolation { cube: q, lhs: m, rhs: cap });
            }
        }
    }

    let delta = side_at(measure.level());
    let ball_constant = 3f64.powi(measure.dim() as i32) * s.exp2();
    let mut worst_ball = 0.0f64;
    let mut ball_violations = 0;
    let mut balls_checked = 0;
    for (center, r) in &sample.balls {
        if *r < delta {
            continue;
        }
        balls_checked += 1;
        let ratio = measure.ball_mass(center, *r) / r.powf(s);
        worst_ball = worst_ball.max(ratio);
        if ratio > ball_constant * (1.0 + REL_SLACK) {
            ball_violations += 1;
        }
    }

    Ok(UpperReport {
        s,
        cubes_checked: checked,
        worst_dyadic_ratio: worst,
        worst_cube,
        violations,
        balls_checked,
        ball_constant,
        worst_ball_ratio: worst_ball,
        ball_violations,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LowerReport {
    pub s: f64,
    pub a: f64,
    pub cubes_checked: usize,
    /// Smallest `μ(Q) / min{content(E ∩ Q), |Q|}` over cubes meeting `E`.
    pub min_ratio: f64,
    pub argmin: Option<CubeId>,
    pub violations: Vec<CubeViolation>,
}

impl LowerReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check `μ(Q̄) >= a · min{content(E ∩ Q, s), |Q|}` on every dyadic cube
/// meeting `set`. Cells carry uniform densities, so `μ(Q̄) = μ(Q)`.
pub fn verify_frostman_lower(measure: &GridMeasure, set: &GridSet, s: f64, a: f64) -> Result<LowerReport> {
    if measure.level() != set.level() || measure.dim() != set.dim() {
        return Err(Error::GridMismatch("measure and set live on different grids".into()));
    }
    let content = ContentTable::build(set, s)?;
    let masses: Vec<BTreeMap<CubeId, f64>> = measure.mass_table();
    let mut min_ratio = f64::INFINITY;
    let mut argmin = None;
    let mut violations = Vec::new();
    let mut checked = 0;
    for (q, c) in content.iter() {
        let rhs = c.min(q.volume());
        if rhs <= 0.0 {
            continue;
        }
        checked += 1;
        let lhs = masses[q.level() as usize].get(q).copied().unwrap_or(0.0);
        let ratio = lhs / rhs;
        if ratio < min_ratio {
            min_ratio = ratio;
            argmin = Some(*q);
        }
        if lhs < a * rhs {
            violations.push(CubeViolation {
                cube: *q,
                lhs,
                rhs: a * rhs,
            });
        }
    }
    Ok(LowerReport {
        s,
        a,
        cubes_checked: checked,
        min_ratio,
        argmin,
        violations,
    })
}
