//! Directions, projections onto `e^⊥`, and Fourier transforms of point-mass
//! measures.

mod energy;

pub use energy::{
    directional_energy, exceptional_directions, fourier_energy, spatial_energy, EnergyReport,
    ExceptionalReport, DEFAULT_DIRECTIONAL_STEPS,
};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dyadic::MAX_DIM;
use crate::error::{Error, Result};
use crate::measures::GridMeasure;

const UNIT_TOL: f64 = 1e-12;

/// A unit vector `e` with an orthonormal frame of `e^⊥`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    e: Vec<f64>,
    frame: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn snap(v: &mut [f64]) {
    for x in v {
        if x.abs() < 1e-15 {
            *x = 0.0;
        }
    }
}

impl Direction {
    /// Normalize `v` and complete it to a frame by Gram–Schmidt on the
    /// standard basis, skipping the basis vector most aligned with `v`.
    pub fn new(v: &[f64]) -> Result<Direction> {
        let n = v.len();
        if !(2..=MAX_DIM).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        let norm = dot(v, v).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidArgument(format!("cannot normalize direction {v:?}")));
        }
        let mut e: Vec<f64> = v.iter().map(|x| x / norm).collect();
        snap(&mut e);
        let skip = (0..n)
            .max_by(|&a, &b| e[a].abs().total_cmp(&e[b].abs()).then(b.cmp(&a)))
            .expect("n >= 2");
        let mut frame: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
        for j in (0..n).filter(|&j| j != skip) {
            let mut u = vec![0.0; n];
            u[j] = 1.0;
            for b in std::iter::once(&e).chain(frame.iter()) {
                let c = dot(&u, b);
                for (ui, bi) in u.iter_mut().zip(b) {
                    *ui -= c * bi;
                }
            }
            let len = dot(&u, &u).sqrt();
            u.iter_mut().for_each(|x| *x /= len);
            snap(&mut u);
            frame.push(u);
        }
        Direction::from_parts(e, frame)
    }

    /// Use a caller-supplied frame; it is validated, not repaired.
    pub fn from_parts(e: Vec<f64>, frame: Vec<Vec<f64>>) -> Result<Direction> {
        let n = e.len();
        if !(2..=MAX_DIM).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        if frame.len() != n - 1 || frame.iter().any(|f| f.len() != n) {
            return Err(Error::InvalidArgument(format!("a frame of e^⊥ in R^{n} needs {} vectors of length {n}", n - 1)));
        }
        if (dot(&e, &e) - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidArgument("direction is not a unit vector".into()));
        }
        for (i, f) in frame.iter().enumerate() {
            if dot(f, f) == 0.0 {
                return Err(Error::InvalidArgument(format!("frame vector {i} has zero norm")));
            }
            if (dot(f, f) - 1.0).abs() > UNIT_TOL || dot(f, &e).abs() > UNIT_TOL {
                return Err(Error::InvalidArgument(format!("frame vector {i} is not a unit vector orthogonal to e")));
            }
            for g in &frame[..i] {
                if dot(f, g).abs() > UNIT_TOL {
                    return Err(Error::InvalidArgument("frame vectors are not orthogonal".into()));
                }
            }
        }
        Ok(Direction { e, frame })
    }

    pub fn from_angle(theta: f64) -> Direction {
        Direction::new(&[theta.cos(), theta.sin()]).expect("unit circle point")
    }

    pub fn axis(n: usize, axis: usize, sign: i32) -> Result<Direction> {
        if axis >= n {
            return Err(Error::InvalidArgument(format!("axis {axis} out of range for n = {n}")));
        }
        let mut v = vec![0.0; n];
        v[axis] = if sign < 0 { -1.0 } else { 1.0 };
        Direction::new(&v)
    }

    /// `−e` with the same frame (bitwise negation of `e`).
    pub fn negated(&self) -> Direction {
        Direction {
            e: self.e.iter().map(|x| -x).collect(),
            frame: self.frame.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.e.len()
    }

    pub fn e(&self) -> &[f64] {
        &self.e
    }

    pub fn frame(&self) -> &[Vec<f64>] {
        &self.frame
    }

    /// Frame coordinates of the orthogonal projection of `x` onto `e^⊥`.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.frame.iter().map(|f| dot(f, x)).collect()
    }

    /// The point of `e^⊥` with frame coordinates `base`.
    pub fn lift(&self, base: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        for (b, f) in base.iter().zip(&self.frame) {
            for (xi, fi) in x.iter_mut().zip(f) {
                *xi += b * fi;
            }
        }
        x
    }

    pub fn along(&self, x: &[f64]) -> f64 {
        dot(&self.e, x)
    }

    /// Deterministic direction net on `S^{n−1}`: equally spaced angles for
    /// `n = 2` (an even count pairs every direction with its exact negation),
    /// a Fibonacci sphere for `n = 3`.
    pub fn net(n: usize, count: usize) -> Result<Vec<Direction>> {
        if count == 0 {
            return Ok(Vec::new());
        }
        match n {
            2 => {
                let half = count / 2;
                let mut dirs = vec![None; count];
                for k in 0..count {
                    if count.is_multiple_of(2) && k >= half {
                        let d: &Direction = dirs[k - half].as_ref().expect("filled");
                        dirs[k] = Some(d.negated());
                    } else {
                        dirs[k] = Some(Direction::from_angle(2.0 * PI * k as f64 / count as f64));
                    }
                }
                Ok(dirs.into_iter().map(|d| d.expect("filled")).collect())
            }
            3 => {
                let golden = PI * (3.0 - 5f64.sqrt());
                (0..count)
                    .map(|k| {
                        let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
                        let r = (1.0 - z * z).sqrt();
                        let phi = golden * k as f64;
                        Direction::new(&[r * phi.cos(), r * phi.sin(), z])
                    })
                    .collect()
            }
            _ => Err(Error::UnsupportedDimension(n)),
        }
    }
}

/// `π_e(μ)`: one point mass per occupied cell, at the projected center.
#[derive(Clone, Debug, Serialize)]
pub struct ProjectedMeasure {
    pub direction: Direction,
    pub points: Vec<(Vec<f64>, f64)>,
}

impl ProjectedMeasure {
    pub fn total_mass(&self) -> f64 {
        self.points.iter().map(|p| p.1).sum()
    }
}

pub fn project_measure(m: &GridMeasure, e: &Direction) -> Result<ProjectedMeasure> {
    if m.dim() != e.dim() {
        return Err(Error::GridMismatch(format!("measure in R^{} vs direction in R^{}", m.dim(), e.dim())));
    }
    let points = m
        .cells()
        .iter()
        .map(|(c, w)| (e.project(&c.center()), *w))
        .collect();
    Ok(ProjectedMeasure {
        direction: e.clone(),
        points,
    })
}

/// Point-mass Fourier transform `Σ m_j exp(−2πi⟨x_j, ξ⟩)`, summed in the
/// stored point order.
pub trait FourierTransform {
    fn fourier_at(&self, xi: &[f64]) -> Complex64;
}

fn point_sum<'a>(points: impl Iterator<Item = (Vec<f64>, f64)> + 'a, xi: &[f64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, w) in points {
        let phase = -2.0 * PI * dot(&x, xi);
        acc += Complex64::new(phase.cos(), phase.sin()) * w;
    }
    acc
}

impl FourierTransform for GridMeasure {
    fn fourier_at(&self, xi: &[f64]) -> Complex64 {
        point_sum(self.cells().iter().map(|(c, w)| (c.center(), *w)), xi)
    }
}

impl FourierTransform for ProjectedMeasure {
    fn fourier_at(&self, eta: &[f64]) -> Complex64 {
        point_sum(self.points.iter().map(|(p, w)| (p.clone(), *w)), eta)
    }
}
