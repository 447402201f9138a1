//! Spatial and Fourier-side Riesz energies, and exceptional directions.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::Direction;
use crate::error::{Error, Result};
use crate::measures::GridMeasure;

pub const DEFAULT_DIRECTIONAL_STEPS: usize = 1 << 12;

const SAME_CELL_EXCLUDED: &str = "same-cell pairs excluded";
const MAX_NODES: usize = 1 << 26;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyReport {
    pub value: f64,
    pub s: f64,
    #[serde(rename = "R")]
    pub r: Option<f64>,
    pub steps: Option<usize>,
    pub mode: &'static str,
    pub diagonal_policy: &'static str,
    /// How each cell enters the transform.
    pub model: &'static str,
    pub quadrature: &'static str,
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidExponent {
            s,
            range: "s > 0".into(),
        });
    }
    Ok(())
}

fn check_quadrature(r: f64, steps: usize) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("cutoff R = {r} must be positive")));
    }
    if steps < 8 {
        return Err(Error::InvalidArgument(format!("steps = {steps} must be at least 8")));
    }
    Ok(())
}

/// `Σ_{Q≠Q'} m(Q) m(Q') |x_Q − x_Q'|^{-s}` over ordered pairs of distinct cells.
pub fn spatial_energy(m: &GridMeasure, s: f64) -> Result<EnergyReport> {
    check_s(s)?;
    let pts: Vec<(Vec<f64>, f64)> = m.cells().iter().map(|(c, w)| (c.center(), *w)).collect();
    let rows: Vec<f64> = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let (x, a) = &pts[i];
            let mut acc = 0.0;
            for (y, b) in &pts[i + 1..] {
                let d2: f64 = x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum();
                acc += b * d2.powf(-0.5 * s);
            }
            a * acc
        })
        .collect();
    Ok(EnergyReport {
        value: 2.0 * rows.iter().sum::<f64>(),
        s,
        r: None,
        steps: None,
        mode: "spatial",
        diagonal_policy: SAME_CELL_EXCLUDED,
        model: "point mass at cell center",
        quadrature: "exact pair sum",
    })
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// `∫_{|ξ|≤R} |μ̂(ξ)|² |ξ|^{s−n} dξ` on a tensor midpoint grid with `steps`
/// nodes per axis over `[−R, R]^n`.
///
/// Each cell is treated as a uniform density on the cell rather than a point
/// mass: the point-mass transform is multiplied by `Π sinc(πξ_iδ)`. With the
/// default cutoff `R = 4/δ` the point-mass model would alias the whole grid
/// lattice into the integral. Same-cell pairs are dropped (the `Σ m(Q)²`
/// term), matching the diagonal policy of [`spatial_energy`], so the ratio of
/// the two energies approximates a measure-independent constant.
pub fn fourier_energy(m: &GridMeasure, s: f64, r: f64, steps: usize) -> Result<EnergyReport> {
    check_quadrature(r, steps)?;
    let n = m.dim();
    if !(s > 0.0 && s < n as f64) {
        return Err(Error::InvalidExponent {
            s,
            range: format!("0 < s < {n}"),
        });
    }
    let side = 1usize << m.level();
    let grid_cells = side.checked_pow(n as u32).filter(|&c| c <= MAX_NODES);
    let nodes = steps.checked_pow(n as u32).filter(|&c| c <= MAX_NODES);
    if grid_cells.is_none() || nodes.is_none() {
        return Err(Error::InvalidArgument(format!(
            "fourier_energy grid too large (2^{} cells per axis, {steps} nodes per axis, n = {n})",
            m.level()
        )));
    }
    let report = |value| EnergyReport {
        value,
        s,
        r: Some(r),
        steps: Some(steps),
        mode: "fourier",
        diagonal_policy: SAME_CELL_EXCLUDED,
        model: "uniform density per cell",
        quadrature: "tensor midpoint, |ξ| ≤ R",
    };
    if m.is_empty() {
        return Ok(report(0.0));
    }

    let delta = m.cells()[0].0.side();
    let h = 2.0 * r / steps as f64;
    let nodes: Vec<f64> = (0..steps).map(|a| -r + (a as f64 + 0.5) * h).collect();
    // kernel[a][i] = exp(−2πi x_i ξ_a) with x_i the i-th cell center coordinate
    let kernel: Vec<Complex64> = nodes
        .iter()
        .flat_map(|&xi| {
            (0..side).map(move |i| {
                let phase = -2.0 * PI * (i as f64 + 0.5) * delta * xi;
                Complex64::new(phase.cos(), phase.sin())
            })
        })
        .collect();

    // dense mass array, row-major in the coordinates
    let mut tensor = vec![Complex64::new(0.0, 0.0); side.pow(n as u32)];
    let mut diag = 0.0;
    for (c, w) in m.cells() {
        let idx = c.coords().iter().fold(0usize, |acc, &x| acc * side + x as usize);
        tensor[idx] = Complex64::new(*w, 0.0);
        diag += w * w;
    }

    // Contract the leading axis and move the new frequency axis to the back;
    // after n rounds the axes are back in their original order.
    for _ in 0..n {
        let rest = tensor.len() / side;
        let src = &tensor;
        let kernel = &kernel;
        tensor = (0..rest)
            .into_par_iter()
            .flat_map_iter(|j| {
                (0..steps).map(move |a| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (i, k) in kernel[a * side..(a + 1) * side].iter().enumerate() {
                        acc += k * src[i * rest + j];
                    }
                    acc
                })
            })
            .collect();
    }

    let taper: Vec<f64> = nodes.iter().map(|&xi| sinc(PI * xi * delta).powi(2)).collect();
    let mut idx = vec![0usize; n];
    let mut total = 0.0;
    for f in &tensor {
        let mut norm2 = 0.0;
        let mut smooth = 1.0;
        for &a in &idx {
            norm2 += nodes[a] * nodes[a];
            smooth *= taper[a];
        }
        if norm2 <= r * r {
            total += (f.norm_sqr() - diag) * smooth * norm2.powf(0.5 * (s - n as f64));
        }
        for d in (0..n).rev() {
            idx[d] += 1;
            if idx[d] < steps {
                break;
            }
            idx[d] = 0;
        }
    }
    Ok(report(total * h.powi(n as i32)))
}

/// Weights of the product-trapezoid rule for `∫_0^R g(r) r^{s−1} dr` with
/// `g` linear on each panel; the weight factor is integrated exactly, so
/// `s < 1` is handled.
fn radial_weights(s: f64, r: f64, steps: usize) -> Vec<f64> {
    let h = r / steps as f64;
    let mut w = vec![0.0; steps + 1];
    for k in 0..steps {
        let a = k as f64 * h;
        let b = if k + 1 == steps { r } else { (k + 1) as f64 * h };
        let i0 = (b.powf(s) - a.powf(s)) / s;
        let i1 = (b.powf(s + 1.0) - a.powf(s + 1.0)) / (s + 1.0);
        w[k] += (b * i0 - i1) / h;
        w[k + 1] += (i1 - a * i0) / h;
    }
    w
}

const LANES: usize = 8;
const RESEED: usize = 64;

/// `|μ̂(r_k e)|²` for `r_k = kR/steps`, `k = 0..=steps`.
///
/// Phases advance by a per-cell complex rotation and are recomputed directly
/// every few steps to bound drift. Negating `e` conjugates every rotation
/// exactly, so the output is bitwise independent of the sign of `e`.
fn radial_power(m: &GridMeasure, e: &Direction, r: f64, steps: usize) -> Vec<f64> {
    let h = r / steps as f64;
    let cells = m.cells();
    let padded = cells.len().div_ceil(LANES) * LANES;
    let mut t = vec![0.0; padded];
    let mut mass = vec![0.0; padded];
    for (i, (c, w)) in cells.iter().enumerate() {
        t[i] = e.along(&c.center());
        mass[i] = *w;
    }
    let step_phase = |ti: f64, k: f64| {
        let ph = -2.0 * PI * ti * k * h;
        (ph.cos(), ph.sin())
    };
    let (mut wr, mut wi) = (vec![0.0; padded], vec![0.0; padded]);
    for i in 0..padded {
        (wr[i], wi[i]) = step_phase(t[i], 1.0);
    }
    let (mut pr, mut pi) = (vec![0.0; padded], vec![0.0; padded]);
    let mut out = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        if k % RESEED == 0 {
            for i in 0..padded {
                (pr[i], pi[i]) = step_phase(t[i], k as f64);
            }
        }
        let mut acc_r = [0.0; LANES];
        let mut acc_i = [0.0; LANES];
        for (((pr, pi), m), (wr, wi)) in pr
            .chunks_exact_mut(LANES)
            .zip(pi.chunks_exact_mut(LANES))
            .zip(mass.chunks_exact(LANES))
            .zip(wr.chunks_exact(LANES).zip(wi.chunks_exact(LANES)))
        {
            for l in 0..LANES {
                acc_r[l] += m[l] * pr[l];
                acc_i[l] += m[l] * pi[l];
                let nr = pr[l] * wr[l] - pi[l] * wi[l];
                let ni = pr[l] * wi[l] + pi[l] * wr[l];
                pr[l] = nr;
                pi[l] = ni;
            }
        }
        let re: f64 = acc_r.iter().sum();
        let im: f64 = acc_i.iter().sum();
        out.push(re * re + im * im);
    }
    out
}

/// `∫_{−R}^{R} |μ̂(re)|² |r|^{s−1} dr` for the point-mass transform.
pub fn directional_energy(m: &GridMeasure, e: &Direction, s: f64, r: f64, steps: usize) -> Result<EnergyReport> {
    check_s(s)?;
    check_quadrature(r, steps)?;
    if m.dim() != e.dim() {
        return Err(Error::GridMismatch(format!("measure in R^{} vs direction in R^{}", m.dim(), e.dim())));
    }
    let value = if m.is_empty() {
        0.0
    } else {
        let power = radial_power(m, e, r, steps);
        let w = radial_weights(s, r, steps);
        // |μ̂(−ξ)| = |μ̂(ξ)|, so the negative half doubles the positive one
        2.0 * power.iter().zip(&w).map(|(p, w)| p * w).sum::<f64>()
    };
    Ok(EnergyReport {
        value,
        s,
        r: Some(r),
        steps: Some(steps),
        mode: "directional",
        diagonal_policy: "diagonal included",
        model: "point mass at cell center",
        quadrature: "product trapezoid on [0, R], doubled",
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ExceptionalReport {
    pub flags: Vec<bool>,
    /// Largest directional energy over the measure family, per direction.
    pub max_energy: Vec<f64>,
    pub fraction: f64,
    pub threshold: f64,
}

/// Flag `e` when some measure of the family has directional energy at least
/// `threshold`.
pub fn exceptional_directions(
    ms: &[GridMeasure],
    dirs: &[Direction],
    threshold: f64,
    s: f64,
    r: f64,
    steps: usize,
) -> Result<ExceptionalReport> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument(format!("threshold {threshold} must be positive")));
    }
    check_s(s)?;
    check_quadrature(r, steps)?;
    // the energy is even in e, so an exact antipode reuses its partner's value
    let partner: Vec<Option<usize>> = dirs
        .iter()
        .enumerate()
        .map(|(j, d)| dirs[..j].iter().position(|c| c.negated().e() == d.e()))
        .collect();
    let fresh: Vec<usize> = (0..dirs.len()).filter(|&j| partner[j].is_none()).collect();
    let computed: Vec<f64> = fresh
        .par_iter()
        .map(|&j| {
            let mut best = 0.0f64;
            for m in ms {
                best = best.max(directional_energy(m, &dirs[j], s, r, steps)?.value);
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let mut max_energy = vec![0.0; dirs.len()];
    for (&j, &v) in fresh.iter().zip(&computed) {
        max_energy[j] = v;
    }
    for j in 0..dirs.len() {
        if let Some(p) = partner[j] {
            max_energy[j] = max_energy[p];
        }
    }
    let flags: Vec<bool> = max_energy.iter().map(|&v| v >= threshold).collect();
    let fraction = if dirs.is_empty() {
        0.0
    } else {
        flags.iter().filter(|&&f| f).count() as f64 / dirs.len() as f64
    };
    Ok(ExceptionalReport {
        flags,
        max_energy,
        fraction,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{CubeId, GridSet};
    use crate::fractals::{generate_ifs, DigitPattern};

    fn two_cells() -> GridMeasure {
        GridMeasure::new(
            2,
            3,
            [(CubeId::new(3, &[0, 0]).unwrap(), 0.5), (CubeId::new(3, &[3, 4]).unwrap(), 0.5)],
        )
        .unwrap()
    }

    #[test]
    fn spatial_examples() {
        let one = GridMeasure::new(2, 3, [(CubeId::new(3, &[1, 1]).unwrap(), 1.0)]).unwrap();
        assert_eq!(spatial_energy(&one, 1.0).unwrap().value, 0.0);
        // centers differ by (3, 4)δ, distance 5/8
        let e = spatial_energy(&two_cells(), 1.5).unwrap().value;
        assert!((e - 0.5 * 0.625f64.powf(-1.5)).abs() < 1e-14);
        assert!(spatial_energy(&one, 0.0).is_err());
    }

    #[test]
    fn spatial_grows_with_mass() {
        let set = GridSet::from_coords(2, 4, [[1, 2], [7, 7], [15, 0]]).unwrap();
        let m = GridMeasure::constant(&set, 0.1).unwrap();
        let mut more: Vec<(CubeId, f64)> = m.cells().to_vec();
        more.push((CubeId::new(4, &[3, 3]).unwrap(), 0.1));
        let bigger = GridMeasure::new(2, 4, more).unwrap();
        assert!(spatial_energy(&bigger, 1.2).unwrap().value >= spatial_energy(&m, 1.2).unwrap().value);
    }

    #[test]
    fn spatial_lebesgue_settles() {
        let e = |j| spatial_energy(&GridMeasure::lebesgue(&GridSet::full(2, j).unwrap()), 1.5).unwrap().value;
        let (e4, e5, e6) = (e(4), e(5), e(6));
        let d5 = (e5 - e4) / e4;
        let d6 = (e6 - e5) / e5;
        assert!(d6 > 0.0 && d6 < 0.10 && d6 < d5, "{e4} {e5} {e6}");
    }

    #[test]
    fn fourier_zero_and_errors() {
        let zero = GridMeasure::zero(2, 4).unwrap();
        assert_eq!(fourier_energy(&zero, 1.5, 64.0, 64).unwrap().value, 0.0);
        let m = two_cells();
        assert!(fourier_energy(&m, 1.5, 0.0, 64).is_err());
        assert!(fourier_energy(&m, 1.5, 8.0, 4).is_err());
        assert!(fourier_energy(&m, 2.0, 8.0, 64).is_err());
        let v = fourier_energy(&m, 1.5, 32.0, 64).unwrap().value;
        assert!(v.is_finite());
    }

    #[test]
    fn fourier_ratio_is_measure_independent() {
        // J = 4 version of the cross-measure check
        let j = 4;
        let r = (j as f64 + 2.0).exp2();
        let full = GridMeasure::lebesgue(&GridSet::full(2, j).unwrap());
        let three = DigitPattern::from_digit_strings(2, &["00", "01", "10"]).unwrap();
        let frac = GridMeasure::uniform_probability(&generate_ifs(&three, j).unwrap());
        let ratio = |m: &GridMeasure| {
            fourier_energy(m, 1.5, r, 512).unwrap().value / spatial_energy(m, 1.5).unwrap().value
        };
        let (a, b) = (ratio(&full), ratio(&frac));
        assert!((a / b - 1.0).abs() < 0.2, "{a} {b}");
    }

    #[test]
    fn directional_single_point_closed_form() {
        let one = GridMeasure::new(2, 3, [(CubeId::new(3, &[2, 6]).unwrap(), 1.0)]).unwrap();
        let d = Direction::from_angle(0.4);
        for s in [0.5, 1.0, 1.7] {
            let v = directional_energy(&one, &d, s, 32.0, 4096).unwrap().value;
            let exact = 2.0 * 32f64.powf(s) / s;
            assert!((v / exact - 1.0).abs() < 1e-6, "{s} {v} {exact}");
        }
    }

    #[test]
    fn directional_is_even_in_e() {
        let set = GridSet::from_coords(2, 5, [[1, 2], [7, 30], [15, 0], [20, 21], [9, 9]]).unwrap();
        let m = GridMeasure::uniform_probability(&set);
        for theta in [0.0, 0.3, 2.0, 4.4] {
            let d = Direction::from_angle(theta);
            let a = directional_energy(&m, &d, 1.5, 128.0, 512).unwrap().value;
            let b = directional_energy(&m, &d.negated(), 1.5, 128.0, 512).unwrap().value;
            assert_eq!(a, b);
        }
        let zero = GridMeasure::zero(2, 5).unwrap();
        assert_eq!(directional_energy(&zero, &Direction::from_angle(1.0), 1.5, 8.0, 8).unwrap().value, 0.0);
    }

    #[test]
    fn recurrence_matches_direct_sum() {
        use crate::transforms::FourierTransform;
        let set = GridSet::from_coords(2, 5, [[1, 2], [7, 30], [15, 0], [20, 21], [9, 9]]).unwrap();
        let m = GridMeasure::uniform_probability(&set);
        let d = Direction::from_angle(0.9);
        let (r, steps) = (128.0, 1000);
        let p = radial_power(&m, &d, r, steps);
        for k in [0, 1, 63, 64, 65, 777, 1000] {
            let rk = k as f64 * r / steps as f64;
            let direct = m.fourier_at(&[rk * d.e()[0], rk * d.e()[1]]).norm_sqr();
            assert!((p[k] - direct).abs() < 1e-11, "{k}");
        }
    }

    #[test]
    fn exceptional_trivia() {
        let dirs = Direction::net(2, 8).unwrap();
        let none = exceptional_directions(&[], &dirs, 1.0, 1.5, 16.0, 64).unwrap();
        assert!(none.flags.iter().all(|f| !f));
        assert_eq!(none.fraction, 0.0);
        let m = two_cells();
        let inf = exceptional_directions(std::slice::from_ref(&m), &dirs, f64::INFINITY, 1.5, 16.0, 64).unwrap();
        assert_eq!(inf.fraction, 0.0);
        let all = exceptional_directions(std::slice::from_ref(&m), &dirs, 1e-12, 1.5, 16.0, 64).unwrap();
        assert_eq!(all.fraction, 1.0);
        for k in 0..4 {
            assert_eq!(all.max_energy[k], all.max_energy[k + 4]);
            let direct = directional_energy(&m, &dirs[k + 4], 1.5, 16.0, 64).unwrap().value;
            assert_eq!(all.max_energy[k + 4], direct);
        }
        assert!(exceptional_directions(&[], &dirs, 0.0, 1.5, 16.0, 64).is_err());
    }
}
