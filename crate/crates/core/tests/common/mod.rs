#![allow(dead_code)]

use vispart::dyadic::{CubeId, GridSet};
use vispart::fractals::rng::CounterRng;
use vispart::fractals::{generate_percolation, PercolationSpec};

/// Every cell of the level-`level` grid, in lexicographic order.
pub fn all_cells(dim: usize, level: u32) -> Vec<Vec<u32>> {
    let side = 1u32 << level;
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..side).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

/// I.i.d. cells kept with probability `density`.
pub fn bernoulli_set(dim: usize, level: u32, density: f64, seed: u64) -> GridSet {
    let rng = CounterRng::new(seed);
    let side = 1u64 << level;
    let total = side.pow(dim as u32);
    let mut coords = [0u32; 4];
    let cells = (0..total).filter(|&i| rng.uniform(&[i, 0xce11]) < density).map(|i| {
        let mut rest = i;
        for a in (0..dim).rev() {
            coords[a] = (rest % side) as u32;
            rest /= side;
        }
        CubeId::new(level, &coords[..dim]).unwrap()
    });
    GridSet::new(dim, level, cells.collect::<Vec<_>>()).unwrap()
}

/// The subset of the full level-`level` grid selected by the bits of `mask`.
pub fn mask_set(dim: usize, level: u32, mask: u64) -> GridSet {
    let cells = all_cells(dim, level);
    let keep = cells.into_iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, c)| c);
    GridSet::from_coords(dim, level, keep).unwrap()
}

/// A mix of uniform noise and multiscale percolation sets, indexed by `i`.
pub fn corpus_set(dim: usize, level: u32, i: u64) -> GridSet {
    let u = CounterRng::new(0xc0ffee).uniform(&[i]);
    if i.is_multiple_of(2) {
        // densities from 2^-8 to 1/2
        bernoulli_set(dim, level, (-1.0 - 7.0 * u).exp2(), i)
    } else {
        generate_percolation(&PercolationSpec {
            dim,
            p: 0.45 + 0.55 * u,
            depth: level,
            seed: i,
        })
        .unwrap()
    }
}

pub fn cube(level: u32, coords: &[u32]) -> CubeId {
    CubeId::new(level, coords).unwrap()
}
