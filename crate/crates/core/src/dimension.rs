//! Box counting over the dyadic ladder and log-log slope estimates.
//!
//! Counts are dyadic ancestor counts, which are comparable to ball-cover
//! numbers within a factor `4^n`.

use serde::Serialize;

use crate::dyadic::GridSet;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoxCountLadder {
    /// `(k, N_k)` in increasing `k`.
    pub counts: Vec<(u32, usize)>,
}

impl BoxCountLadder {
    pub fn get(&self, level: u32) -> Option<usize> {
        self.counts.iter().find(|&&(k, _)| k == level).map(|&(_, c)| c)
    }
}

/// Number of occupied level-`k` cubes for each `k` in `levels`.
pub fn box_counts(set: &GridSet, levels: std::ops::RangeInclusive<u32>) -> Result<BoxCountLadder> {
    if *levels.end() > set.level() {
        return Err(Error::InvalidArgument(format!(
            "ladder level {} exceeds set level {}",
            levels.end(),
            set.level()
        )));
    }
    let mut counts = Vec::new();
    for k in levels {
        counts.push((k, set.ancestors(k)?.len()));
    }
    Ok(BoxCountLadder { counts })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DimEstimate {
    pub slope: f64,
    pub stderr: f64,
    pub points: usize,
}

pub const DEFAULT_DROP: usize = 2;

/// Least-squares slope of `log2 N_k` against `k` after dropping the
/// `drop_coarsest` first rungs. Empty levels carry no information and are
/// skipped.
pub fn dim_estimate(ladder: &BoxCountLadder, drop_coarsest: usize) -> Result<DimEstimate> {
    let pts: Vec<(f64, f64)> = ladder
        .counts
        .iter()
        .skip(drop_coarsest)
        .filter(|&&(_, c)| c > 0)
        .map(|&(k, c)| (k as f64, (c as f64).log2()))
        .collect();
    let m = pts.len();
    if m < 3 {
        return Err(Error::InsufficientPoints(m));
    }
    let mf = m as f64;
    let xm = pts.iter().map(|p| p.0).sum::<f64>() / mf;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / mf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - xm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    let slope = sxy / sxx;
    let rss: f64 = pts.iter().map(|p| (p.1 - ym - slope * (p.0 - xm)).powi(2)).sum();
    let stderr = (rss / (mf - 2.0) / sxx).sqrt();
    Ok(DimEstimate {
        slope,
        stderr,
        points: m,
    })
}
