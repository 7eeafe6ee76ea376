//! Dyadic maximal operators on the torus.
//!
//! Averages over dyadic blocks are built by repeated pairwise averaging, one
//! axis at a time, and kept at full resolution so the running maximum is a
//! plain elementwise `max`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FlagError, Result};
use crate::grid::{lp_norm_real, same_grid, Grid, SampledFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaximalFamily {
    DyadicCubes,
    DyadicRectangles,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MaximalConfig {
    pub family: MaximalFamily,
    /// Largest side length considered.
    pub dilation_cap: f64,
}

impl MaximalConfig {
    pub fn cubes() -> Self {
        Self {
            family: MaximalFamily::DyadicCubes,
            dilation_cap: 1.0,
        }
    }

    pub fn rectangles() -> Self {
        Self {
            family: MaximalFamily::DyadicRectangles,
            dilation_cap: 1.0,
        }
    }

    fn coarsest_level(&self, grid: Grid) -> Result<u32> {
        if !(self.dilation_cap > 0.0 && self.dilation_cap <= 1.0) {
            return Err(FlagError::Config(format!(
                "dilation cap must lie in (0, 1], got {}",
                self.dilation_cap
            )));
        }
        let level = (-self.dilation_cap.log2()).ceil().max(0.0) as u32;
        Ok(level.min(grid.level()))
    }
}

/// Dyadic Hardy-Littlewood maximal function over cubes.
pub fn hl_maximal(f: &SampledFunction) -> SampledFunction {
    maximal_with(f, &MaximalConfig::cubes()).expect("default configuration is valid")
}

/// Dyadic strong maximal function over axis-dyadic rectangles.
pub fn strong_maximal(f: &SampledFunction) -> SampledFunction {
    maximal_with(f, &MaximalConfig::rectangles()).expect("default configuration is valid")
}

pub fn maximal_with(f: &SampledFunction, config: &MaximalConfig) -> Result<SampledFunction> {
    let m = maximal_real(f.grid(), &f.abs(), config)?;
    Ok(SampledFunction::from_vec_unchecked(
        f.grid(),
        m.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
    ))
}

/// Maximal function of nonnegative samples.
pub fn maximal_real(grid: Grid, values: &[f64], config: &MaximalConfig) -> Result<Vec<f64>> {
    if values.len() != grid.len() {
        return Err(FlagError::Shape(format!(
            "expected {} samples, got {}",
            grid.len(),
            values.len()
        )));
    }
    let coarsest = config.coarsest_level(grid)?;
    let mut out = values.to_vec();
    match config.family {
        MaximalFamily::DyadicCubes => {
            let mut cur = values.to_vec();
            for level in (coarsest..grid.level()).rev() {
                for axis in 0..grid.dim() {
                    cur = halve(grid, &cur, axis, level);
                }
                max_into(&mut out, &cur);
            }
        }
        MaximalFamily::DyadicRectangles => rectangles(grid, values, 0, coarsest, &mut out),
    }
    Ok(out)
}

fn rectangles(grid: Grid, arr: &[f64], axis: usize, coarsest: u32, out: &mut Vec<f64>) {
    let last = axis + 1 == grid.dim();
    let mut cur = arr.to_vec();
    for level in (coarsest..=grid.level()).rev() {
        if level < grid.level() {
            cur = halve(grid, &cur, axis, level);
        }
        if last {
            max_into(out, &cur);
        } else {
            rectangles(grid, &cur, axis + 1, coarsest, out);
        }
    }
}

/// Averages blocks along `axis` from level `level + 1` to `level`.
fn halve(grid: Grid, arr: &[f64], axis: usize, level: u32) -> Vec<f64> {
    let half = 1usize << (grid.level() - level - 1);
    let stride = grid.stride(axis);
    let side = grid.side();
    arr.iter()
        .enumerate()
        .map(|(i, &v)| {
            let c = (i / stride) % side;
            let partner = i - c * stride + (c ^ half) * stride;
            0.5 * (v + arr[partner])
        })
        .collect()
}

fn max_into(out: &mut [f64], cur: &[f64]) {
    for (o, &c) in out.iter_mut().zip(cur) {
        if c > *o {
            *o = c;
        }
    }
}

/// `{x : M_s(chi_mask)(x) > threshold}`, or `>=` when `inclusive`.
pub fn dilated_set(grid: Grid, mask: &[bool], threshold: f64, inclusive: bool) -> Result<Vec<bool>> {
    let chi: Vec<f64> = mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let m = maximal_real(grid, &chi, &MaximalConfig::rectangles())?;
    Ok(m.iter()
        .map(|&v| if inclusive { v >= threshold } else { v > threshold })
        .collect())
}

/// Vector-valued maximal inequality measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FsReport {
    pub r: f64,
    pub p: f64,
    pub maximal_norm: f64,
    pub plain_norm: f64,
    pub ratio: f64,
    pub degenerate: bool,
}

/// `|(sum_k (M_s f_k)^r)^{1/r}|_p / |(sum_k |f_k|^r)^{1/r}|_p`.
pub fn fs_vector_check(family: &[SampledFunction], r: f64, p: f64) -> Result<FsReport> {
    if !(r > 1.0) || !(p > 1.0) {
        return Err(FlagError::Domain(format!(
            "vector-valued maximal check needs r > 1 and p > 1, got r={r}, p={p}"
        )));
    }
    let first = family
        .first()
        .ok_or_else(|| FlagError::Config("function family is empty".into()))?;
    let grid = first.grid();
    let mut num = vec![0.0; grid.len()];
    let mut den = vec![0.0; grid.len()];
    for f in family {
        same_grid(grid, f.grid())?;
        let a = f.abs();
        let m = maximal_real(grid, &a, &MaximalConfig::rectangles())?;
        for i in 0..grid.len() {
            num[i] += m[i].powf(r);
            den[i] += a[i].powf(r);
        }
    }
    let root = |v: Vec<f64>| v.into_iter().map(|x| x.powf(1.0 / r)).collect::<Vec<_>>();
    let maximal_norm = lp_norm_real(&root(num), grid.cell_volume(), p)?;
    let plain_norm = lp_norm_real(&root(den), grid.cell_volume(), p)?;
    let (ratio, degenerate) = if plain_norm == 0.0 {
        (1.0, true)
    } else {
        (maximal_norm / plain_norm, false)
    };
    Ok(FsReport {
        r,
        p,
        maximal_norm,
        plain_norm,
        ratio,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn indicator(grid: Grid, cells: &[usize]) -> SampledFunction {
        let mut v = vec![0.0; grid.len()];
        for &c in cells {
            v[c] = 1.0;
        }
        SampledFunction::from_real(grid, &v).unwrap()
    }

    #[test]
    fn constants_are_fixed() {
        let g = make_grid(1, 1, 4).unwrap();
        let f = SampledFunction::constant(g, Complex64::new(0.0, -2.5));
        assert!(hl_maximal(&f).abs().iter().all(|&v| (v - 2.5).abs() < 1e-15));
        assert!(strong_maximal(&f).abs().iter().all(|&v| (v - 2.5).abs() < 1e-15));
    }

    #[test]
    fn single_cell_cube_values() {
        let g = make_grid(1, 1, 3).unwrap();
        let f = indicator(g, &[g.index(&[0, 0])]);
        let m = hl_maximal(&f);
        // Smallest dyadic cube containing both points has side 2^-s.
        for i in 0..g.len() {
            let c = g.coords(i);
            let s = (0..=3u32)
                .rev()
                .find(|&s| c.iter().all(|&x| x >> (3 - s) == 0))
                .unwrap();
            let want = 4f64.powi(-(3 - s as i32));
            assert_eq!(m.values()[i].re, want);
        }
    }

    #[test]
    fn strong_dominates_cubes() {
        let g = make_grid(1, 1, 3).unwrap();
        let row: Vec<usize> = (0..4).map(|x| g.index(&[x, 2])).collect();
        let f = indicator(g, &row);
        let (m, ms) = (hl_maximal(&f), strong_maximal(&f));
        for i in 0..g.len() {
            assert!(ms.values()[i].re >= m.values()[i].re);
        }
        assert_eq!(ms.values()[g.index(&[6, 2])].re, 0.5);
        assert_eq!(m.values()[g.index(&[6, 2])].re, 1.0 / 16.0);
    }

    #[test]
    fn dilation_cap() {
        let g = make_grid(1, 1, 4).unwrap();
        let f = indicator(g, &[0]);
        let capped = maximal_with(
            &f,
            &MaximalConfig {
                dilation_cap: 0.25,
                ..MaximalConfig::cubes()
            },
        )
        .unwrap();
        assert_eq!(capped.values()[g.index(&[15, 15])].re, 0.0);
        assert!(maximal_with(
            &f,
            &MaximalConfig {
                dilation_cap: 1.5,
                ..MaximalConfig::cubes()
            }
        )
        .is_err());
    }

    #[test]
    fn dilated_set_contains_set() {
        let g = make_grid(1, 1, 4).unwrap();
        let mask: Vec<bool> = (0..g.len()).map(|i| i % 7 == 0 || i % 11 == 3).collect();
        let d = dilated_set(g, &mask, 0.5, false).unwrap();
        assert!(mask.iter().zip(&d).all(|(&a, &b)| !a || b));
    }

    #[test]
    fn fs_examples() {
        let g = make_grid(1, 1, 4).unwrap();
        let one = SampledFunction::constant(g, Complex64::new(1.0, 0.0));
        assert!((fs_vector_check(&[one], 2.0, 2.0).unwrap().ratio - 1.0).abs() < 1e-14);
        let z = SampledFunction::zeros(g);
        let r = fs_vector_check(&[z.clone(), z], 2.0, 2.0).unwrap();
        assert_eq!((r.ratio, r.degenerate), (1.0, true));
        assert!(matches!(fs_vector_check(&[], 2.0, 2.0), Err(FlagError::Config(_))));
        assert!(matches!(
            fs_vector_check(&[SampledFunction::zeros(g)], 1.0, 2.0),
            Err(FlagError::Domain(_))
        ));
    }
}
