//! Carleson sums over candidate open sets and the sequence-space norms.

use std::collections::HashSet;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{FlagError, Result};
use crate::filters::FilterBank;
use crate::grid::{lp_norm_real, same_grid, DyadicRectangle, Grid, RectShape, SampledFunction};
use crate::squarefuncs::g_flag_discrete;
use crate::transform::{visit_channels, CoefficientField};

const PREFIX_LIMIT: usize = 1 << 24;

/// A finite union of dyadic rectangles, resolved to grid cells.
#[derive(Debug, Clone)]
pub struct OpenSetApprox {
    grid: Grid,
    rects: Vec<DyadicRectangle>,
    mask: Vec<bool>,
    measure: f64,
    prefix: Option<Vec<u32>>,
}

impl PartialEq for OpenSetApprox {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.mask == other.mask
    }
}

impl OpenSetApprox {
    pub fn from_rects(grid: Grid, rects: Vec<DyadicRectangle>) -> Result<Self> {
        let mut mask = vec![false; grid.len()];
        for r in &rects {
            if r.i_idx.len() != grid.n() || r.j_idx.len() != grid.m() {
                return Err(FlagError::Shape(format!(
                    "rectangle {r:?} does not match the grid dimensions"
                )));
            }
            let shape = RectShape::new(grid, r.j, r.k, r.offset)?;
            if r.axis_indices()
                .iter()
                .enumerate()
                .any(|(a, &i)| i as usize >= shape.axis_len(a))
            {
                return Err(FlagError::Range(format!("rectangle {r:?} index out of range")));
            }
            for_each_cell_of(grid, r, |g| mask[g] = true)?;
        }
        Self::build(grid, rects, mask)
    }

    /// Open set given directly as a cell mask.
    pub fn from_mask(grid: Grid, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != grid.len() {
            return Err(FlagError::Shape("mask length does not match the grid".into()));
        }
        Self::build(grid, Vec::new(), mask)
    }

    fn build(grid: Grid, rects: Vec<DyadicRectangle>, mask: Vec<bool>) -> Result<Self> {
        let cells = mask.iter().filter(|&&b| b).count();
        if cells == 0 {
            return Err(FlagError::Config("open set has zero measure".into()));
        }
        let measure = cells as f64 * grid.cell_volume();
        let prefix = ((grid.side() + 1).pow(grid.dim() as u32) <= PREFIX_LIMIT).then(|| prefix_sums(grid, &mask));
        Ok(Self {
            grid,
            rects,
            mask,
            measure,
            prefix,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn measure(&self) -> f64 {
        self.measure
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Defining rectangles; for mask-defined sets, one rectangle per cell at
    /// the finest scale of offset `offset`.
    pub fn rects(&self, offset: u32) -> Vec<DyadicRectangle> {
        if !self.rects.is_empty() {
            return self.rects.clone();
        }
        let s = self.grid.level().saturating_sub(offset);
        let n = self.grid.n();
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| {
                let c: Vec<u32> = self.grid.coords(i).iter().map(|&v| v as u32).collect();
                DyadicRectangle {
                    j: s,
                    k: s,
                    offset,
                    i_idx: c[..n].to_vec(),
                    j_idx: c[n..].to_vec(),
                }
            })
            .collect()
    }

    /// Number of grid cells of the box `ranges` inside the set.
    fn count_in(&self, ranges: &[(usize, usize)]) -> usize {
        match &self.prefix {
            Some(p) => box_count(self.grid, p, ranges),
            None => {
                let mut n = 0;
                visit_box(self.grid, ranges, |g| n += self.mask[g] as usize);
                n
            }
        }
    }

    /// Rectangle-in-set test on the cell decomposition.
    pub fn contains(&self, r: &DyadicRectangle) -> bool {
        match r.cell_ranges(self.grid) {
            Ok(ranges) => {
                let volume: usize = ranges.iter().map(|(a, b)| b - a).product();
                self.count_in(&ranges) == volume
            }
            Err(_) => false,
        }
    }

    /// Fraction of `r` covered by the set.
    pub fn coverage(&self, r: &DyadicRectangle) -> Result<f64> {
        let ranges = r.cell_ranges(self.grid)?;
        let volume: usize = ranges.iter().map(|(a, b)| b - a).product();
        Ok(self.count_in(&ranges) as f64 / volume as f64)
    }
}

fn for_each_cell_of(grid: Grid, r: &DyadicRectangle, f: impl FnMut(usize)) -> Result<()> {
    let ranges = r.cell_ranges(grid)?;
    visit_box(grid, &ranges, f);
    Ok(())
}

fn visit_box(grid: Grid, ranges: &[(usize, usize)], mut f: impl FnMut(usize)) {
    let d = ranges.len();
    let mut c: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    loop {
        f(grid.index(&c));
        let mut a = d;
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            c[a] += 1;
            if c[a] < ranges[a].1 {
                break;
            }
            c[a] = ranges[a].0;
        }
    }
}

/// Inclusive-exclusive prefix sums over a `(side + 1)^d` lattice.
fn prefix_sums(grid: Grid, mask: &[bool]) -> Vec<u32> {
    let d = grid.dim();
    let s1 = grid.side() + 1;
    let len = s1.pow(d as u32);
    let mut p = vec![0u32; len];
    for (i, &b) in mask.iter().enumerate() {
        if b {
            let c = grid.coords(i);
            let idx = c.iter().fold(0, |acc, &x| acc * s1 + x + 1);
            p[idx] = 1;
        }
    }
    for axis in 0..d {
        let stride = s1.pow((d - 1 - axis) as u32);
        for i in 0..len {
            if !(i / stride).is_multiple_of(s1) {
                p[i] += p[i - stride];
            }
        }
    }
    p
}

fn box_count(grid: Grid, p: &[u32], ranges: &[(usize, usize)]) -> usize {
    let d = ranges.len();
    let s1 = grid.side() + 1;
    let mut total: i64 = 0;
    for corner in 0..(1usize << d) {
        let mut idx = 0;
        let mut sign = 1i64;
        for (a, r) in ranges.iter().enumerate() {
            let hi = corner >> a & 1 == 1;
            idx = idx * s1 + if hi { r.1 } else { r.0 };
            if !hi {
                sign = -sign;
            }
        }
        total += sign * p[idx] as i64;
    }
    total as usize
}

/// Best candidate of a Carleson maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarlesonValue {
    pub value: f64,
    pub best: usize,
}

/// `max_Omega (|Omega|^{1-2/p} sum_{R in Omega} energy_R)^{1/2}`.
fn carleson_sup(
    field: &CoefficientField,
    energy: &[Vec<f64>],
    p: f64,
    candidates: &[OpenSetApprox],
) -> Result<CarlesonValue> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(FlagError::Domain(format!(
            "Carleson exponent must lie in (0, 1], got {p}"
        )));
    }
    if candidates.is_empty() {
        return Err(FlagError::Config("candidate family is empty".into()));
    }
    for c in candidates {
        same_grid(c.grid(), field.grid())?;
    }
    let values: Vec<f64> = candidates
        .par_iter()
        .map(|omega| {
            let mut sum = 0.0;
            for (s, e) in field.slots().iter().zip(energy) {
                for (idx, &v) in e.iter().enumerate() {
                    if v != 0.0 && omega.contains(&field.rectangle(s, idx)) {
                        sum += v;
                    }
                }
            }
            (omega.measure().powf(1.0 - 2.0 / p) * sum).sqrt()
        })
        .collect();
    let (best, value) = values.iter().enumerate().fold(
        (0, f64::NEG_INFINITY),
        |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
    );
    Ok(CarlesonValue { value, best })
}

fn squared_entries(t: &CoefficientField) -> Vec<Vec<f64>> {
    t.slots()
        .iter()
        .map(|s| s.values.iter().map(|v| v.norm_sqr()).collect())
        .collect()
}

/// The `c^p` sequence norm over a candidate family (a lower bound for the true sup).
pub fn cp_norm(t: &CoefficientField, p: f64, candidates: &[OpenSetApprox]) -> Result<f64> {
    Ok(cp_norm_detailed(t, p, candidates)?.value)
}

pub fn cp_norm_detailed(t: &CoefficientField, p: f64, candidates: &[OpenSetApprox]) -> Result<CarlesonValue> {
    carleson_sup(t, &squared_entries(t), p, candidates)
}

/// Per-rectangle energies `int_R |psi_{j,k} * f|^2` as cell sums.
pub fn rectangle_energies(f: &SampledFunction, bank: &FilterBank, offset: u32) -> Result<CoefficientField> {
    let mut field = CoefficientField::for_bank(bank, offset)?;
    let grid = f.grid();
    let vol = grid.cell_volume();
    visit_channels(f, bank, |(j, k), conv| {
        let shape = RectShape::new(grid, j, k, offset)?;
        let mut e = vec![0.0; shape.len()];
        shape.for_each_cell(grid, |g, a| e[a] += conv[g].norm_sqr() * vol);
        let slot = field.slot_values_mut(j, k).expect("slot exists for bank scale");
        for (s, v) in slot.iter_mut().zip(e) {
            *s = Complex64::new(v, 0.0);
        }
        Ok(())
    })?;
    Ok(field)
}

/// The `CMO^p` norm over a candidate family.
pub fn cmo_norm(
    f: &SampledFunction,
    bank: &FilterBank,
    p: f64,
    offset: u32,
    candidates: &[OpenSetApprox],
) -> Result<f64> {
    let energies = rectangle_energies(f, bank, offset)?;
    let e: Vec<Vec<f64>> = energies
        .slots()
        .iter()
        .map(|s| s.values.iter().map(|v| v.re).collect())
        .collect();
    Ok(carleson_sup(&energies, &e, p, candidates)?.value)
}

/// The `s^p` sequence norm.
pub fn sp_norm(s: &CoefficientField, p: f64) -> Result<f64> {
    let weighted = s.map_entries(|j, k, _, v| {
        let shape = RectShape::new(s.grid(), j, k, s.offset()).expect("field shapes are valid");
        v / shape.cell_measure().sqrt()
    });
    let g = g_flag_discrete(&weighted);
    lp_norm_real(&g.abs(), s.grid().cell_volume(), p)
}

/// `sum_R s_R conj(t_R)` over rectangle entries.
pub fn duality_pair(s: &CoefficientField, t: &CoefficientField) -> Result<Complex64> {
    s.same_shape(t)?;
    Ok(s.slots()
        .iter()
        .zip(t.slots())
        .flat_map(|(a, b)| a.values.iter().zip(&b.values).map(|(x, y)| x * y.conj()))
        .sum())
}

/// Deterministic candidate family of at most `budget` sets: single rectangles
/// by coefficient density, level sets of the discrete square function, and
/// unions of the densest rectangles.
pub fn generate_candidates(t: &CoefficientField, budget: usize) -> Result<Vec<OpenSetApprox>> {
    if budget == 0 {
        return Err(FlagError::Config("candidate budget must be at least 1".into()));
    }
    let grid = t.grid();
    let mut ranked: Vec<(f64, DyadicRectangle)> = Vec::new();
    for s in t.slots() {
        let m = s.shape.cell_measure();
        for (idx, v) in s.values.iter().enumerate() {
            let e = v.norm_sqr();
            if e > 0.0 {
                ranked.push((e / m, t.rectangle(s, idx)));
            }
        }
    }
    // Stable sort keeps slot order among ties.
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut out: Vec<OpenSetApprox> = Vec::new();
    let mut seen: HashSet<Vec<bool>> = HashSet::new();
    let mut push = |o: OpenSetApprox, out: &mut Vec<OpenSetApprox>| {
        if out.len() < budget && seen.insert(o.mask.clone()) {
            out.push(o);
        }
    };
    if ranked.is_empty() {
        push(OpenSetApprox::from_mask(grid, vec![true; grid.len()])?, &mut out);
        return Ok(out);
    }
    let extras = if budget >= 4 { budget / 4 } else { 0 };
    let singles = budget - 2 * extras;
    for (_, r) in ranked.iter().take(singles) {
        push(OpenSetApprox::from_rects(grid, vec![r.clone()])?, &mut out);
    }
    let g = g_flag_discrete(&t.without_low_pass()).abs();
    let top = g.iter().fold(0.0f64, |a, &b| a.max(b));
    let mut level = 0;
    while out.len() < singles + extras && level < 4 * extras && top > 0.0 {
        level += 1;
        let lambda = top * (-(level as f64) / 2.0).exp2();
        let mask: Vec<bool> = g.iter().map(|&v| v > lambda).collect();
        if mask.iter().any(|&b| b) {
            push(OpenSetApprox::from_mask(grid, mask)?, &mut out);
        }
    }
    let mut size = 2;
    while out.len() < budget && size <= ranked.len() {
        let rects: Vec<DyadicRectangle> = ranked[..size].iter().map(|(_, r)| r.clone()).collect();
        push(OpenSetApprox::from_rects(grid, rects)?, &mut out);
        size *= 2;
    }
    for (_, r) in ranked.iter().skip(singles) {
        if out.len() >= budget {
            break;
        }
        push(OpenSetApprox::from_rects(grid, vec![r.clone()])?, &mut out);
    }
    Ok(out)
}

/// Writes candidates as a JSON list of rectangle lists.
pub fn write_candidates(path: &Path, candidates: &[OpenSetApprox], offset: u32) -> Result<()> {
    let lists: Vec<Vec<DyadicRectangle>> = candidates.iter().map(|c| c.rects(offset)).collect();
    std::fs::write(path, serde_json::to_string(&lists)?)?;
    Ok(())
}

pub fn read_candidates(path: &Path, grid: Grid) -> Result<Vec<OpenSetApprox>> {
    let lists: Vec<Vec<DyadicRectangle>> = serde_json::from_slice(&std::fs::read(path)?)?;
    lists.into_iter().map(|r| OpenSetApprox::from_rects(grid, r)).collect()
}
