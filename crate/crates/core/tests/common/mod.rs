//! Brute-force reference implementations on tiny grids.
#![allow(dead_code)]

use flaglp::filters::FilterBank;
use flaglp::grid::{DyadicRectangle, Grid, SampledFunction};
use flaglp::CoefficientField;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn random_function(grid: Grid, seed: u64) -> SampledFunction {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let v = (0..grid.len())
        .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        .collect();
    SampledFunction::new(grid, v).unwrap()
}

/// Periodic difference of two lattice indices on a 2D grid.
fn diff(grid: Grid, a: usize, b: usize) -> usize {
    let side = grid.side();
    let (ca, cb) = (grid.coords(a), grid.coords(b));
    let c: Vec<usize> = ca.iter().zip(&cb).map(|(x, y)| (x + side - y) % side).collect();
    grid.index(&c)
}

/// Lifted filter by summing the partial convolution in the second variable.
pub fn dense_lift(bank: &FilterBank, j: u32, k: u32) -> Vec<f64> {
    let grid = bank.grid();
    let side = grid.side();
    let (a, b) = (bank.spatial_psi1(j).unwrap(), bank.spatial_psi2(k).unwrap());
    let h = grid.spacing();
    (0..grid.len())
        .map(|i| {
            let (x1, x2) = (i / side, i % side);
            (0..side)
                .map(|z| a[x1 * side + (x2 + side - z) % side] * b[z] * h)
                .sum()
        })
        .collect()
}

/// Analysis coefficients by direct spatial convolution at each anchor.
pub fn dense_analysis(f: &SampledFunction, bank: &FilterBank, offset: u32) -> CoefficientField {
    let grid = f.grid();
    let vol = grid.cell_volume();
    let mut out = CoefficientField::for_bank(bank, offset).unwrap();
    for (j, k) in bank.scales() {
        let kernel = dense_lift(bank, j, k);
        let slot = out.slot(j, k).unwrap().clone();
        let anchors = slot.shape.anchor_grid_indices(grid);
        let vals = out.slot_values_mut(j, k).unwrap();
        for (v, &x) in vals.iter_mut().zip(&anchors) {
            *v = (0..grid.len())
                .map(|y| f.values()[y] * kernel[diff(grid, x, y)] * vol)
                .sum();
        }
    }
    out
}

/// Maximal average of `|f|` over dyadic rectangles (or cubes) containing each point.
pub fn brute_maximal(f: &SampledFunction, cubes_only: bool) -> Vec<f64> {
    let grid = f.grid();
    let side = grid.side();
    let level = grid.level();
    let abs = f.abs();
    let mut out = vec![0.0f64; grid.len()];
    for a in 0..=level {
        for b in 0..=level {
            if cubes_only && a != b {
                continue;
            }
            let (wa, wb) = (side >> a, side >> b);
            for i in 0..grid.len() {
                let (x, y) = (i / side, i % side);
                let (x0, y0) = (x / wa * wa, y / wb * wb);
                let mut s = 0.0;
                for u in x0..x0 + wa {
                    for v in y0..y0 + wb {
                        s += abs[u * side + v];
                    }
                }
                out[i] = out[i].max(s / (wa * wb) as f64);
            }
        }
    }
    out
}

fn point(grid: Grid, i: usize) -> Vec<f64> {
    grid.coords(i).iter().map(|&c| c as f64 * grid.spacing()).collect()
}

/// `|| (sum_R |s_R|^2 |R|^{-1} chi_R)^{1/2} ||_p` by testing every rectangle at every point.
pub fn dense_sp_norm(s: &CoefficientField, p: f64) -> f64 {
    let grid = s.grid();
    let rects: Vec<(DyadicRectangle, f64)> = s
        .slots()
        .iter()
        .flat_map(|slot| {
            slot.values
                .iter()
                .enumerate()
                .filter(|(_, v)| v.norm_sqr() > 0.0)
                .map(|(i, v)| {
                    let r = s.rectangle(slot, i);
                    let w = v.norm_sqr() / r.measure();
                    (r, w)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let total: f64 = (0..grid.len())
        .map(|i| {
            let x = point(grid, i);
            let g: f64 = rects.iter().filter(|(r, _)| r.contains_point(&x)).map(|(_, w)| w).sum();
            g.sqrt().powf(p)
        })
        .sum();
    (total * grid.cell_volume()).powf(1.0 / p)
}

/// Carleson sup over every union of the coarse cells that tile all rectangles of `t`.
///
/// Feasible only when the rectangles are unions of at most 16 coarse cells.
pub fn exhaustive_cp(t: &CoefficientField, p: f64) -> f64 {
    let grid = t.grid();
    let mut entries: Vec<(DyadicRectangle, f64)> = Vec::new();
    let (mut lx, mut ly) = (0u32, 0u32);
    for slot in t.slots() {
        lx = lx.max(slot.shape.x_level);
        ly = ly.max(slot.shape.y_level);
        for (i, v) in slot.values.iter().enumerate() {
            if v.norm_sqr() > 0.0 {
                entries.push((t.rectangle(slot, i), v.norm_sqr()));
            }
        }
    }
    let (nx, ny) = (1usize << lx, 1usize << ly);
    let cells = nx * ny;
    assert!(cells <= 16, "exhaustive search limited to 16 cells, got {cells}");
    let cell_measure = 1.0 / cells as f64;
    // Coarse cells covered by each entry.
    let covers: Vec<u32> = entries
        .iter()
        .map(|(r, _)| {
            let mut bits = 0u32;
            for cx in 0..nx {
                for cy in 0..ny {
                    let x = [(cx as f64 + 0.5) / nx as f64, (cy as f64 + 0.5) / ny as f64];
                    if r.contains_point(&x) {
                        bits |= 1 << (cx * ny + cy);
                    }
                }
            }
            bits
        })
        .collect();
    let _ = grid;
    let mut best = f64::NEG_INFINITY;
    for mask in 1u32..(1u32 << cells) {
        let sum: f64 = entries
            .iter()
            .zip(&covers)
            .filter(|(_, &c)| c & mask == c)
            .map(|((_, e), _)| e)
            .sum();
        let measure = mask.count_ones() as f64 * cell_measure;
        best = best.max((measure.powf(1.0 - 2.0 / p) * sum).sqrt());
    }
    best
}
