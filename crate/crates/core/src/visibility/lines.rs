//! Good/bad line classification, tube stacks, and the bad-line audits.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{Footprint, LineNet, Scales, Tube};
use crate::dyadic::{dyadic_content, CubeId, GridSet};
use crate::error::{Error, Result};
use crate::measures::GridMeasure;
use crate::transforms::Direction;

/// Relative slack for comparisons of products of powers of `δ`.
const REL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Good,
    Bad,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LineRecord {
    #[serde(skip)]
    pub index: Vec<i64>,
    pub base: Vec<f64>,
    pub label: Label,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<CubeId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stack: Option<usize>,
}

/// Labels for every line of a net, in net order (sorted by base cell).
#[derive(Clone, Debug, Serialize)]
pub struct LineClassification {
    pub direction: Direction,
    #[serde(skip)]
    pub net_level: u32,
    pub lines: Vec<LineRecord>,
}

impl LineClassification {
    pub fn bad(&self) -> impl Iterator<Item = &LineRecord> {
        self.lines.iter().filter(|l| l.label == Label::Bad)
    }

    pub fn bad_count(&self) -> usize {
        self.bad().count()
    }
}

fn footprints(cells: &[CubeId], e: &Direction) -> Result<Vec<Footprint>> {
    cells.iter().map(|c| Footprint::of(c, e)).collect()
}

/// Call `hit(line, cell)` whenever a net line's base lies within `r` of a
/// cell's footprint.
fn splat(net: &LineNet, cells: &[CubeId], fps: &[Footprint], r: f64, mut hit: impl FnMut(usize, usize)) {
    let e = net.direction();
    for (i, (c, fp)) in cells.iter().zip(fps).enumerate() {
        let (mut lo, mut hi) = Footprint::bounding(c, e);
        lo.iter_mut().for_each(|x| *x -= r);
        hi.iter_mut().for_each(|x| *x += r);
        for flat in net.candidates(&lo, &hi) {
            if fp.dist(&net.base(flat)) <= r {
                hit(flat, i);
            }
        }
    }
}

/// Label each line of the level-`net_level` net.
///
/// A line is bad when some coarse cube `Q` has at least `δ^{2ε−1}` heavy
/// δ-cells meeting the closed `2δ`-neighbourhood of the line while the line
/// misses every closed cell of `k_fine` inside `Q`. The first such `Q` (in
/// cube order) is the witness.
pub fn classify_lines(
    k_fine: &GridSet,
    coarse: &GridSet,
    heavy: &BTreeMap<CubeId, Vec<CubeId>>,
    e: &Direction,
    scales: &Scales,
    net_level: u32,
) -> Result<LineClassification> {
    let stack = scales.stack_threshold();
    if stack < 1.0 {
        return Err(Error::DegenerateThreshold(format!(
            "stack threshold δ^(2ε−1) = {stack} < 1 (ε = {} > 1/2): every line with one heavy cell nearby would be bad",
            scales.epsilon
        )));
    }
    if k_fine.level() < scales.fine {
        return Err(Error::GridMismatch(format!(
            "fine set at level {} is coarser than δ = 2^-{}",
            k_fine.level(),
            scales.fine
        )));
    }
    if coarse.level() != scales.coarse || k_fine.dim() != e.dim() || coarse.dim() != e.dim() {
        return Err(Error::GridMismatch("coarse grid or dimension does not match the scale ladder".into()));
    }
    let net = LineNet::new(e, net_level)?;
    let radius = 2.0 * scales.delta();
    let mut labels: Vec<Option<(CubeId, usize)>> = vec![None; net.len()];
    for q in coarse.iter() {
        let Some(cells) = heavy.get(q) else { continue };
        if let Some(c) = cells.iter().find(|c| !q.contains(c) || c.level() != scales.fine) {
            return Err(Error::GridMismatch(format!("heavy cell {c:?} is not a δ-cell of {q:?}")));
        }
        if (cells.len() as f64) < stack * (1.0 - REL_TOL) {
            continue;
        }
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        splat(&net, cells, &footprints(cells, e)?, radius, |flat, _| {
            *counts.entry(flat).or_default() += 1;
        });
        counts.retain(|&flat, c| labels[flat].is_none() && *c as f64 >= stack * (1.0 - REL_TOL));
        if counts.is_empty() {
            continue;
        }
        let inside = k_fine.within(q);
        let mut blocked = vec![false; net.len()];
        splat(&net, inside.cells(), &footprints(inside.cells(), e)?, 0.0, |flat, _| {
            blocked[flat] = true;
        });
        for (flat, c) in counts {
            if !blocked[flat] {
                labels[flat] = Some((*q, c));
            }
        }
    }
    let lines = labels
        .into_iter()
        .enumerate()
        .map(|(flat, w)| LineRecord {
            index: net.index(flat),
            base: net.base(flat),
            label: if w.is_some() { Label::Bad } else { Label::Good },
            witness: w.map(|w| w.0),
            stack: w.map(|w| w.1),
        })
        .collect();
    Ok(LineClassification {
        direction: e.clone(),
        net_level,
        lines,
    })
}

/// Heavy-cell counts per closed tube of width `δ`; tubes with count 0 are
/// omitted.
pub fn tube_stack_counts(q: &CubeId, heavy: &[CubeId], e: &Direction, delta: f64) -> Result<BTreeMap<Tube, usize>> {
    let mut out: BTreeMap<Tube, usize> = BTreeMap::new();
    for c in heavy {
        if !q.contains(c) {
            return Err(Error::GridMismatch(format!("heavy cell {c:?} lies outside {q:?}")));
        }
        let fp = Footprint::of(c, e)?;
        let (lo, hi) = Footprint::bounding(c, e);
        let first: Vec<i64> = lo.iter().map(|x| (x / delta).floor() as i64 - 1).collect();
        let last: Vec<i64> = hi.iter().map(|x| (x / delta).floor() as i64).collect();
        let mut idx = first.clone();
        loop {
            let blo: Vec<f64> = idx.iter().map(|&z| z as f64 * delta).collect();
            let bhi: Vec<f64> = idx.iter().map(|&z| (z + 1) as f64 * delta).collect();
            if fp.meets_box(&blo, &bhi) {
                *out.entry(Tube { cell: idx.clone() }).or_default() += 1;
            }
            let mut k = 0;
            while k < idx.len() {
                idx[k] += 1;
                if idx[k] <= last[k] {
                    break;
                }
                idx[k] = first[k];
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverReport {
    /// Visible heavy cells touched by a good line based in each tube.
    pub counts: BTreeMap<String, usize>,
    pub max_count: usize,
    pub bound: f64,
    pub constant: f64,
    pub passed: bool,
}

fn tube_key(idx: &[i64]) -> String {
    idx.iter().map(|z| z.to_string()).collect::<Vec<_>>().join(",")
}

/// Per tube, count the δ-cells that are visible, heavy, and met by at least
/// one good line based in the tube; pass when the largest count is at most
/// `constant·δ^{ε−1}`.
pub fn good_line_cover_check(
    visible: &GridSet,
    classification: &LineClassification,
    heavy: &GridSet,
    scales: &Scales,
    constant: f64,
) -> Result<CoverReport> {
    let e = &classification.direction;
    let net = LineNet::new(e, classification.net_level)?;
    if net.len() != classification.lines.len() {
        return Err(Error::GridMismatch("classification does not match its line net".into()));
    }
    let delta = scales.delta();
    let cells: Vec<CubeId> = visible.iter().filter(|c| heavy.contains(c)).copied().collect();
    let mut per_tube: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
    splat(&net, &cells, &footprints(&cells, e)?, 0.0, |flat, i| {
        if classification.lines[flat].label == Label::Good {
            let tube: Vec<i64> = net.base(flat).iter().map(|b| (b / delta).floor() as i64).collect();
            let list = per_tube.entry(tube).or_default();
            if list.last() != Some(&i) {
                list.push(i);
            }
        }
    });
    let counts: BTreeMap<String, usize> = per_tube.iter().map(|(k, v)| (tube_key(k), v.len())).collect();
    let max_count = counts.values().copied().max().unwrap_or(0);
    let bound = constant * delta.powf(scales.epsilon - 1.0);
    Ok(CoverReport {
        counts,
        max_count,
        bound,
        constant,
        passed: max_count as f64 <= bound,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditViolation {
    pub base: Vec<f64>,
    pub witness: CubeId,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub bad_lines: usize,
    pub radius: f64,
    pub rule: &'static str,
    pub rhs: f64,
    /// Smallest `lhs / rhs` over bad lines; `None` when there are none.
    pub min_slack: Option<f64>,
    pub violations: Vec<AuditViolation>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// For every bad line with witness `Q`, check
/// `μ_Q(ℓ((2√n)δ)) ≥ δ^{2ε−1}·δ^{n+ε}`.
///
/// A cell counts toward the neighbourhood when its center lies within
/// `(2√n)δ` of the line. A heavy cell meeting `ℓ(2δ)` has its center within
/// `(2 + √n/2)δ ≤ (2√n)δ`, so the inequality holds whenever the
/// classification is correct.
pub fn badline_mass_audit(
    mu_q: &BTreeMap<CubeId, GridMeasure>,
    classification: &LineClassification,
    scales: &Scales,
) -> Result<AuditReport> {
    let e = &classification.direction;
    let n = scales.n as f64;
    let radius = 2.0 * n.sqrt() * scales.delta();
    let rhs = scales.stack_threshold() * scales.heavy_threshold();
    let mut violations = Vec::new();
    let mut min_slack: Option<f64> = None;
    let mut projected: BTreeMap<CubeId, Vec<(Vec<f64>, f64)>> = BTreeMap::new();
    for line in classification.bad() {
        let q = line.witness.expect("bad lines carry a witness");
        let pts = match projected.get(&q) {
            Some(p) => p,
            None => {
                let m = mu_q
                    .get(&q)
                    .ok_or_else(|| Error::InvalidArgument(format!("no restricted measure for witness {q:?}")))?;
                let p = m.cells().iter().map(|(c, w)| (e.project(&c.center()), *w)).collect();
                projected.entry(q).or_insert(p)
            }
        };
        let lhs: f64 = pts
            .iter()
            .filter(|(p, _)| {
                let d2: f64 = p.iter().zip(&line.base).map(|(a, b)| (a - b) * (a - b)).sum();
                d2.sqrt() <= radius
            })
            .map(|(_, w)| w)
            .sum();
        let slack = lhs / rhs;
        min_slack = Some(min_slack.map_or(slack, |m: f64| m.min(slack)));
        if lhs < rhs * (1.0 - REL_TOL) {
            violations.push(AuditViolation {
                base: line.base.clone(),
                witness: q,
                lhs,
                rhs,
            });
        }
    }
    Ok(AuditReport {
        bad_lines: classification.bad_count(),
        radius,
        rule: "cell centers within radius",
        rhs,
        min_slack,
        violations,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectionContent {
    pub union: f64,
    pub per_witness: Vec<(CubeId, f64)>,
}

/// Dyadic content, on the frame grid of `e^⊥` at the net level, of the base
/// cells of bad lines: per witness and in union.
pub fn badline_projection_content(classification: &LineClassification, s_proj: f64) -> Result<ProjectionContent> {
    let e = &classification.direction;
    let m = e.dim() - 1;
    if !(s_proj > 0.0 && s_proj <= m as f64) {
        return Err(Error::InvalidExponent {
            s: s_proj,
            range: format!("0 < s ≤ {m}"),
        });
    }
    // frame coordinates of the unit cube lie in [−√n, √n]; embed the frame
    // grid into a dyadic box [−2^p, 2^p)^m with 2^p ≥ √n
    let p = ((e.dim() as f64).sqrt().log2().ceil()).max(0.0) as u32;
    let level = classification.net_level + p + 1;
    let shift = 1i64 << (classification.net_level + p);
    let scale = ((p + 1) as f64).exp2().powf(s_proj);
    let root = CubeId::root(m)?;
    let content = |lines: &mut dyn Iterator<Item = &LineRecord>| -> Result<f64> {
        let cells = lines
            .map(|l| {
                let coords: Vec<u32> = l.index.iter().map(|&z| (z + shift) as u32).collect();
                CubeId::new(level, &coords)
            })
            .collect::<Result<Vec<_>>>()?;
        let set = GridSet::new(m, level, cells)?;
        Ok(scale * dyadic_content(&set, s_proj, &root)?)
    };
    let union = content(&mut classification.bad())?;
    let mut witnesses: Vec<CubeId> = classification.bad().filter_map(|l| l.witness).collect();
    witnesses.sort_unstable();
    witnesses.dedup();
    let per_witness = witnesses
        .into_iter()
        .map(|q| Ok((q, content(&mut classification.bad().filter(|l| l.witness == Some(q)))?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProjectionContent { union, per_witness })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scales(fine: u32, coarse: u32, epsilon: f64) -> Scales {
        Scales {
            n: 2,
            fine,
            coarse,
            epsilon,
        }
    }

    /// A column of heavy cells in the coarse cube `Q = [0, 1/2)²` at
    /// `J = 6`, with the fine set equal to that column.
    fn column_instance() -> (GridSet, GridSet, BTreeMap<CubeId, Vec<CubeId>>, Scales) {
        // ε = 1/4 gives stack threshold δ^{-1/2} = 8
        let sc = scales(6, 1, 0.25);
        let column: Vec<CubeId> = (0..16).map(|y| CubeId::new(6, &[10, y]).unwrap()).collect();
        let k = GridSet::new(2, 6, column.clone()).unwrap();
        let coarse = GridSet::from_coords(2, 1, [[0, 0]]).unwrap();
        let heavy = BTreeMap::from([(CubeId::new(1, &[0, 0]).unwrap(), column)]);
        (k, coarse, heavy, sc)
    }

    #[test]
    fn column_makes_nearby_line_bad() {
        let (k, coarse, heavy, sc) = column_instance();
        let e = Direction::axis(2, 1, 1).unwrap();
        // at net level J the bases sit at half-integer multiples of δ
        let cl = classify_lines(&k, &coarse, &heavy, &e, &sc, 6).unwrap();
        let delta = sc.delta();
        // column spans frame coordinate [10δ, 11δ]; a line 1.5δ away is bad
        let probe = cl
            .lines
            .iter()
            .find(|l| (l.base[0] - 12.5 * delta).abs() < 1e-12)
            .expect("net line at 12.5δ");
        assert_eq!(probe.label, Label::Bad);
        assert_eq!(probe.witness, Some(CubeId::new(1, &[0, 0]).unwrap()));
        assert_eq!(probe.stack, Some(16));
        // lines through the column are blocked; lines farther than 2δ are free
        for l in &cl.lines {
            let d = (l.base[0] - 10.5 * delta).abs() - 0.5 * delta;
            let expect_bad = d > 0.0 && d <= 2.0 * delta;
            assert_eq!(l.label == Label::Bad, expect_bad, "{:?}", l.base);
        }

        let mu_q = BTreeMap::from([(
            CubeId::new(1, &[0, 0]).unwrap(),
            GridMeasure::constant(&k, sc.heavy_threshold()).unwrap(),
        )]);
        let audit = badline_mass_audit(&mu_q, &cl, &sc).unwrap();
        assert!(audit.passed());
        assert!(audit.bad_lines > 0);
        assert!(audit.min_slack.unwrap() >= 16.0 / 8.0 - 1e-12);
    }

    #[test]
    fn trivial_classifications() {
        let (_, coarse, heavy, sc) = column_instance();
        let e = Direction::from_angle(0.3);
        let full = GridSet::full(2, 6).unwrap();
        let cl = classify_lines(&full, &coarse, &heavy, &e, &sc, 8).unwrap();
        assert_eq!(cl.bad_count(), 0);
        let cl = classify_lines(&GridSet::empty(2, 6).unwrap(), &coarse, &BTreeMap::new(), &e, &sc, 8).unwrap();
        assert_eq!(cl.bad_count(), 0);
        let audit = badline_mass_audit(&BTreeMap::new(), &cl, &sc).unwrap();
        assert!(audit.passed() && audit.min_slack.is_none());
        assert_eq!(badline_projection_content(&cl, 0.9).unwrap().union, 0.0);
    }

    #[test]
    fn full_grid_lines_are_only_bad_outside_their_witness() {
        // Inside Q the full grid blocks every line; lines just outside Q̄
        // still see a stack of Q's cells within 2δ.
        let sc = scales(6, 1, 0.2);
        let full = GridSet::full(2, 6).unwrap();
        let coarse = full.ancestors(1).unwrap();
        let heavy: BTreeMap<CubeId, Vec<CubeId>> =
            coarse.iter().map(|q| (*q, full.within(q).cells().to_vec())).collect();
        for theta in [0.0, 0.35, 1.2] {
            let e = Direction::from_angle(theta);
            let cl = classify_lines(&full, &coarse, &heavy, &e, &sc, 8).unwrap();
            for l in cl.bad() {
                let q = l.witness.unwrap();
                let d = Footprint::of(&q, &e).unwrap().dist(&l.base);
                assert!(d > 0.0 && d <= 2.0 * sc.delta() + 1e-15, "{theta} {:?} {d}", l.base);
            }
        }
    }

    #[test]
    fn degenerate_stack_threshold() {
        let (k, coarse, heavy, _) = column_instance();
        let sc = scales(6, 1, 0.6);
        let e = Direction::axis(2, 1, 1).unwrap();
        assert!(matches!(
            classify_lines(&k, &coarse, &heavy, &e, &sc, 8),
            Err(Error::DegenerateThreshold(_))
        ));
    }

    #[test]
    fn tube_counts() {
        let q = CubeId::new(1, &[0, 0]).unwrap();
        let e = Direction::axis(2, 1, 1).unwrap();
        let delta = 1.0 / 64.0;
        assert!(tube_stack_counts(&q, &[], &e, delta).unwrap().is_empty());
        // one cell meets its own tube and the two sharing its boundary
        let one = tube_stack_counts(&q, &[CubeId::new(6, &[5, 3]).unwrap()], &e, delta).unwrap();
        let tubes: Vec<i64> = one.keys().map(|t| t.cell[0]).collect();
        assert_eq!(tubes, vec![4, 5, 6]);
        assert!(one.values().all(|&c| c == 1));
        let column: Vec<CubeId> = (0..32).map(|y| CubeId::new(6, &[7, y]).unwrap()).collect();
        let counts = tube_stack_counts(&q, &column, &e, delta).unwrap();
        assert_eq!(counts[&Tube { cell: vec![7] }], 32);
    }

    #[test]
    fn cover_check_on_axis_column() {
        let sc = scales(6, 1, 0.25);
        let column = GridSet::from_coords(2, 6, (0..64u32).map(|y| [9, y])).unwrap();
        let e = Direction::axis(2, 1, 1).unwrap();
        let visible = super::super::visible_cells_axis(&column, 1, 1).unwrap();
        let cl = classify_lines(&column, &GridSet::empty(2, 1).unwrap(), &BTreeMap::new(), &e, &sc, 8).unwrap();
        let r = good_line_cover_check(&visible, &cl, &column, &sc, 8.0).unwrap();
        assert!(r.max_count <= 1 && r.passed);
        let empty = GridSet::empty(2, 6).unwrap();
        let r = good_line_cover_check(&empty, &cl, &column, &sc, 8.0).unwrap();
        assert_eq!(r.max_count, 0);
    }

    #[test]
    fn projection_content_of_all_lines() {
        let e = Direction::from_angle(0.5);
        let net = LineNet::new(&e, 6).unwrap();
        let cl = LineClassification {
            direction: e.clone(),
            net_level: 6,
            lines: net
                .lines()
                .map(|l| LineRecord {
                    index: l.index,
                    base: l.base,
                    label: Label::Bad,
                    witness: Some(CubeId::root(2).unwrap()),
                    stack: Some(1),
                })
                .collect(),
        };
        let s = 0.9;
        let pc = badline_projection_content(&cl, s).unwrap();
        let width = e.frame()[0].iter().map(|x| x.abs()).sum::<f64>();
        // a dyadic cover of an interval costs between its length^s and a few times that
        assert!(pc.union >= 0.5 * width.powf(s) && pc.union <= 4.0 * width.powf(s), "{}", pc.union);
        assert_eq!(pc.per_witness.len(), 1);
        assert_eq!(pc.per_witness[0].1, pc.union);
    }
}
