//! Flag square functions, discrete Hardy norms and the sup/inf comparison.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FlagError, Result};
use crate::filters::FilterBank;
use crate::grid::{lp_norm_real, same_grid, RectShape, SampledFunction};
use crate::transform::{analyze, visit_channels, CoefficientField};

fn real_function(grid: crate::grid::Grid, values: Vec<f64>) -> SampledFunction {
    SampledFunction::from_vec_unchecked(grid, values.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
}

/// Pointwise `(sum_{j,k} |psi_{j,k} * f|^2)^{1/2}`, low-pass excluded.
pub fn g_flag(f: &SampledFunction, bank: &FilterBank) -> Result<SampledFunction> {
    let mut acc = vec![0.0; f.grid().len()];
    visit_channels(f, bank, |_, conv| {
        for (a, c) in acc.iter_mut().zip(conv) {
            *a += c.norm_sqr();
        }
        Ok(())
    })?;
    Ok(real_function(f.grid(), acc.into_iter().map(f64::sqrt).collect()))
}

/// Piecewise-constant square function of a coefficient field, low-pass excluded.
pub fn g_flag_discrete(coeffs: &CoefficientField) -> SampledFunction {
    let grid = coeffs.grid();
    let mut acc = vec![0.0; grid.len()];
    for s in coeffs.slots() {
        if s.values.iter().all(|v| v.norm_sqr() == 0.0) {
            continue;
        }
        let sq: Vec<f64> = s.values.iter().map(|v| v.norm_sqr()).collect();
        s.shape.for_each_cell(grid, |g, a| acc[g] += sq[a]);
    }
    real_function(grid, acc.into_iter().map(f64::sqrt).collect())
}

/// L^p norm of the discrete square function for any `p > 0`.
pub fn discrete_square_norm(f: &SampledFunction, bank: &FilterBank, p: f64, offset: u32) -> Result<f64> {
    let g = g_flag_discrete(&analyze(f, bank, offset)?);
    lp_norm_real(&g.abs(), g.grid().cell_volume(), p)
}

/// Discrete `H^p` norm for `p` in `(0, 1]`.
pub fn hardy_norm(f: &SampledFunction, bank: &FilterBank, p: f64, offset: u32) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(FlagError::Domain(format!("Hardy exponent must lie in (0, 1], got {p}")));
    }
    discrete_square_norm(f, bank, p, offset)
}

/// Which grid value represents each rectangle in a cell-sampled square function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellSample {
    Sup,
    Inf,
    Anchor,
}

/// Square function whose `(j, k)` term is `|psi_{j,k} * f|^2` at the cell's
/// sup, inf or anchor, held over the rectangle.
pub fn cell_square_function(
    f: &SampledFunction,
    bank: &FilterBank,
    offset: u32,
    mode: CellSample,
) -> Result<SampledFunction> {
    let grid = f.grid();
    same_grid(grid, bank.grid())?;
    let mut acc = vec![0.0; grid.len()];
    visit_channels(f, bank, |(j, k), conv| {
        let shape = RectShape::new(grid, j, k, offset)?;
        let per_cell: Vec<f64> = match mode {
            CellSample::Anchor => shape
                .anchor_grid_indices(grid)
                .iter()
                .map(|&i| conv[i].norm_sqr())
                .collect(),
            CellSample::Sup | CellSample::Inf => {
                let init = if mode == CellSample::Sup { 0.0 } else { f64::INFINITY };
                let mut v = vec![init; shape.len()];
                shape.for_each_cell(grid, |g, a| {
                    let x = conv[g].norm_sqr();
                    v[a] = if mode == CellSample::Sup {
                        v[a].max(x)
                    } else {
                        v[a].min(x)
                    };
                });
                v
            }
        };
        shape.for_each_cell(grid, |g, a| acc[g] += per_cell[a]);
        Ok(())
    })?;
    Ok(real_function(grid, acc.into_iter().map(f64::sqrt).collect()))
}

/// Sup-over-cell versus inf-over-cell comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PPReport {
    pub p: f64,
    pub sup_norm: f64,
    pub inf_norm: f64,
    pub ratio: f64,
    pub degenerate: bool,
    pub banks: [String; 2],
}

/// Ratio of the sup version with `bank_a` to the inf version with `bank_b`.
///
/// A 0/0 ratio is reported as 1 with `degenerate` set.
pub fn pp_compare(
    f: &SampledFunction,
    bank_a: &FilterBank,
    bank_b: &FilterBank,
    p: f64,
    offset: u32,
) -> Result<PPReport> {
    same_grid(f.grid(), bank_a.grid())?;
    same_grid(f.grid(), bank_b.grid())?;
    let vol = f.grid().cell_volume();
    let sup = cell_square_function(f, bank_a, offset, CellSample::Sup)?;
    let inf = cell_square_function(f, bank_b, offset, CellSample::Inf)?;
    let sup_norm = lp_norm_real(&sup.abs(), vol, p)?;
    let inf_norm = lp_norm_real(&inf.abs(), vol, p)?;
    let (ratio, degenerate) = if sup_norm == 0.0 && inf_norm == 0.0 {
        (1.0, true)
    } else if inf_norm == 0.0 {
        (f64::INFINITY, true)
    } else {
        (sup_norm / inf_norm, false)
    };
    Ok(PPReport {
        p,
        sup_norm,
        inf_norm,
        ratio,
        degenerate,
        banks: [bank_a.id(), bank_b.id()],
    })
}
