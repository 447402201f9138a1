//! Projections of closed cubes onto `e^⊥`, in frame coordinates.

use crate::dyadic::CubeId;
use crate::error::{Error, Result};
use crate::transforms::Direction;

/// `π_e(Q̄)`: an interval when `n = 2`, a convex polygon when `n = 3`.
#[derive(Clone, Debug, PartialEq)]
pub enum Footprint {
    Interval(f64, f64),
    /// Counter-clockwise hull vertices.
    Polygon(Vec<[f64; 2]>),
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut h: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = h.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while h.len() >= start + 2 && cross(h[h.len() - 2], h[h.len() - 1], p) <= 0.0 {
                h.pop();
            }
            h.push(p);
        }
        h.pop();
    }
    h
}

fn seg_dist2(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    };
    let q = [a[0] + t * d[0] - p[0], a[1] + t * d[1] - p[1]];
    q[0] * q[0] + q[1] * q[1]
}

impl Footprint {
    pub fn of(cube: &CubeId, e: &Direction) -> Result<Footprint> {
        let center = cube.center();
        let half = cube.side() / 2.0;
        match e.dim() {
            2 => {
                let f = &e.frame()[0];
                let c = f[0] * center[0] + f[1] * center[1];
                let w = half * (f[0].abs() + f[1].abs());
                Ok(Footprint::Interval(c - w, c + w))
            }
            3 => {
                let corners = (0..8)
                    .map(|b| {
                        let x: Vec<f64> = (0..3)
                            .map(|i| center[i] + if b >> i & 1 == 1 { half } else { -half })
                            .collect();
                        let p = e.project(&x);
                        [p[0], p[1]]
                    })
                    .collect();
                Ok(Footprint::Polygon(hull(corners)))
            }
            n => Err(Error::UnsupportedDimension(n)),
        }
    }

    /// Axis-aligned bounding box of `π_e(Q̄)` in any dimension.
    pub fn bounding(cube: &CubeId, e: &Direction) -> (Vec<f64>, Vec<f64>) {
        let center = cube.center();
        let half = cube.side() / 2.0;
        e.frame()
            .iter()
            .map(|f| {
                let c: f64 = f.iter().zip(&center).map(|(a, b)| a * b).sum();
                let w = half * f.iter().map(|x| x.abs()).sum::<f64>();
                (c - w, c + w)
            })
            .unzip()
    }

    /// Distance from a frame point to the footprint (0 inside).
    pub fn dist(&self, p: &[f64]) -> f64 {
        match self {
            Footprint::Interval(a, b) => (a - p[0]).max(p[0] - b).max(0.0),
            Footprint::Polygon(v) => {
                let q = [p[0], p[1]];
                let inside = v.len() >= 3 && (0..v.len()).all(|i| cross(v[i], v[(i + 1) % v.len()], q) >= 0.0);
                if inside {
                    return 0.0;
                }
                (0..v.len())
                    .map(|i| seg_dist2(q, v[i], v[(i + 1) % v.len()]))
                    .fold(f64::INFINITY, f64::min)
                    .sqrt()
            }
        }
    }

    /// Whether the footprint meets the closed box `[lo, hi]`.
    pub fn meets_box(&self, lo: &[f64], hi: &[f64]) -> bool {
        match self {
            Footprint::Interval(a, b) => *a <= hi[0] && lo[0] <= *b,
            Footprint::Polygon(v) => {
                // separating axes: the box axes, then the polygon edge normals
                for k in 0..2 {
                    let min = v.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
                    let max = v.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
                    if max < lo[k] || min > hi[k] {
                        return false;
                    }
                }
                let corners = [[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]];
                for i in 0..v.len() {
                    let (a, b) = (v[i], v[(i + 1) % v.len()]);
                    if corners.iter().all(|&c| cross(a, b, c) < 0.0) {
                        return false;
                    }
                }
                true
            }
        }
    }
}
