//! Calderón-Zygmund decomposition by stopping-time classes of dyadic
//! rectangles, and the interpolation experiment harness.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FlagError, Result};
use crate::filters::FilterBank;
use crate::grid::{same_grid, RectShape, SampledFunction};
use crate::maximal::{maximal_real, MaximalConfig};
use crate::squarefuncs::{g_flag_discrete, hardy_norm};
use crate::transform::{analyze, neumann_inverse, synthesize_discrete, CoefficientField};

/// Stopping-time parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CzOptions {
    /// Coverage fraction that sends a rectangle to the next class.
    pub threshold: f64,
    /// Dilated sets use `M_s(chi) >= threshold` rather than `>`.
    pub inclusive: bool,
    pub neumann_tol: f64,
}

impl Default for CzOptions {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            inclusive: true,
            neumann_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CzReport {
    pub alpha: f64,
    pub p: f64,
    pub p1: f64,
    pub p2: f64,
    pub g_norm: f64,
    pub b_norm: f64,
    pub f_norm: f64,
    #[serde(rename = "fittedC_g")]
    pub fitted_c_g: f64,
    #[serde(rename = "fittedC_b")]
    pub fitted_c_b: f64,
    pub level_set_measures: Vec<f64>,
    /// Rectangles per class, `R_0` first.
    pub class_counts: Vec<usize>,
    pub support_violations: usize,
    pub additivity_error: f64,
    pub neumann_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct CzDecomposition {
    pub good: SampledFunction,
    pub bad: SampledFunction,
    pub report: CzReport,
}

/// `H^p` norm for `p <= 1`, `L^p` norm otherwise.
pub fn hardy_type_norm(f: &SampledFunction, bank: &FilterBank, p: f64, offset: u32) -> Result<f64> {
    if p > 1.0 {
        f.lp_norm(p)
    } else {
        hardy_norm(f, bank, p, offset)
    }
}

fn check_exponents(p: f64, p1: f64, p2: f64) -> Result<()> {
    if !(p2 > 0.0 && p2 <= 1.0 && p2 < p && p < p1 && p1.is_finite()) {
        return Err(FlagError::Domain(format!(
            "exponents must satisfy 0 < p2 <= 1 and p2 < p < p1 < inf, got p={p}, p1={p1}, p2={p2}"
        )));
    }
    Ok(())
}

/// The square function of the exact discrete coefficients of `f`.
pub fn cz_square_function(
    f: &SampledFunction,
    bank: &FilterBank,
    offset: u32,
    tol: f64,
) -> Result<(CoefficientField, Vec<f64>, usize)> {
    let sol = neumann_inverse(f, bank, offset, tol)?;
    let coeffs = analyze(&sol.function, bank, offset)?;
    let s = g_flag_discrete(&coeffs.without_low_pass()).abs();
    Ok((coeffs, s, sol.iterations))
}

pub fn cz_decompose(
    f: &SampledFunction,
    bank: &FilterBank,
    alpha: f64,
    offset: u32,
    p: f64,
    p1: f64,
    p2: f64,
) -> Result<CzDecomposition> {
    cz_decompose_with(f, bank, alpha, offset, (p, p1, p2), &CzOptions::default())
}

pub fn cz_decompose_with(
    f: &SampledFunction,
    bank: &FilterBank,
    alpha: f64,
    offset: u32,
    (p, p1, p2): (f64, f64, f64),
    opts: &CzOptions,
) -> Result<CzDecomposition> {
    check_exponents(p, p1, p2)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(FlagError::Domain(format!("alpha must be positive, got {alpha}")));
    }
    if !(opts.threshold > 0.0 && opts.threshold <= 1.0) {
        return Err(FlagError::Config(format!(
            "threshold must lie in (0, 1], got {}",
            opts.threshold
        )));
    }
    same_grid(f.grid(), bank.grid())?;
    let grid = f.grid();
    let (coeffs, s, iterations) = cz_square_function(f, bank, offset, opts.neumann_tol)?;

    let mut levels: Vec<Vec<bool>> = Vec::new();
    loop {
        let lambda = alpha * 2f64.powi(levels.len() as i32);
        let mask: Vec<bool> = s.iter().map(|&v| v > lambda).collect();
        let empty = !mask.iter().any(|&b| b);
        levels.push(mask);
        if empty {
            break;
        }
    }
    let vol = grid.cell_volume();
    let level_set_measures: Vec<f64> = levels
        .iter()
        .map(|m| m.iter().filter(|&&b| b).count() as f64 * vol)
        .collect();

    let dilated: Vec<Vec<bool>> = levels[..levels.len() - 1]
        .iter()
        .map(|m| {
            let chi: Vec<f64> = m.iter().map(|&b| b as u8 as f64).collect();
            let ms = maximal_real(grid, &chi, &MaximalConfig::rectangles())?;
            Ok(ms
                .iter()
                .map(|&v| {
                    if opts.inclusive {
                        v >= opts.threshold
                    } else {
                        v > opts.threshold
                    }
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut good = coeffs.clone();
    let mut bad = coeffs.map_entries(|_, _, _, _| Complex64::new(0.0, 0.0));
    bad.low_pass_mut()
        .iter_mut()
        .for_each(|v| *v = Complex64::new(0.0, 0.0));
    let mut class_counts = vec![0usize; levels.len()];
    let mut support_violations = 0;
    for slot in coeffs.slots() {
        let shape = RectShape::new(grid, slot.j, slot.k, offset)?;
        let class = classify(&shape, grid, &levels, opts.threshold);
        let mut violated = vec![false; shape.len()];
        shape.for_each_cell(grid, |g, a| {
            let l = class[a];
            if l >= 1 && !dilated[l - 1][g] {
                violated[a] = true;
            }
        });
        support_violations += violated.iter().filter(|&&v| v).count();
        let gv = good.slot_values_mut(slot.j, slot.k).expect("same layout");
        let bv = bad.slot_values_mut(slot.j, slot.k).expect("same layout");
        for (a, &l) in class.iter().enumerate() {
            class_counts[l] += 1;
            if l >= 1 {
                bv[a] = gv[a];
                gv[a] = Complex64::new(0.0, 0.0);
            }
        }
    }
    let g = synthesize_discrete(&good, bank)?;
    let b = synthesize_discrete(&bad, bank)?;
    let fl2 = f.l2_norm();
    let additivity_error = if fl2 == 0.0 {
        g.add(&b)?.l2_norm()
    } else {
        g.add(&b)?.sub(f)?.l2_norm() / fl2
    };

    let g_norm = hardy_type_norm(&g, bank, p1, offset)?;
    let b_norm = hardy_type_norm(&b, bank, p2, offset)?;
    let f_norm = hardy_type_norm(f, bank, p, offset)?;
    let fp = f_norm.powf(p);
    let fit = |norm: f64, q: f64| {
        if fp == 0.0 {
            0.0
        } else {
            norm.powf(q) / (alpha.powf(q - p) * fp)
        }
    };
    let report = CzReport {
        alpha,
        p,
        p1,
        p2,
        g_norm,
        b_norm,
        f_norm,
        fitted_c_g: fit(g_norm, p1),
        fitted_c_b: fit(b_norm, p2),
        level_set_measures,
        class_counts,
        support_violations,
        additivity_error,
        neumann_iterations: iterations,
    };
    Ok(CzDecomposition {
        good: g,
        bad: b,
        report,
    })
}

/// Stopping class of every rectangle in a slot: 0 when less than `threshold`
/// of it meets the first level set, else the first level it stops meeting.
fn classify(shape: &RectShape, grid: crate::grid::Grid, levels: &[Vec<bool>], threshold: f64) -> Vec<usize> {
    let cells = shape.cell_measure() / grid.cell_volume();
    let mut class = vec![usize::MAX; shape.len()];
    let mut counts = vec![0usize; shape.len()];
    for (l, mask) in levels.iter().enumerate() {
        counts.iter_mut().for_each(|c| *c = 0);
        shape.for_each_cell(grid, |g, a| counts[a] += mask[g] as usize);
        for (c, &n) in class.iter_mut().zip(&counts) {
            if *c == usize::MAX && (n as f64) < threshold * cells {
                *c = l;
            }
        }
    }
    class
}

/// `count` geometric thresholds spanning the given quantiles of the
/// positive values of the square function.
pub fn alpha_sweep(square: &[f64], count: usize, lo_quantile: f64, hi_quantile: f64) -> Result<Vec<f64>> {
    let mut v: Vec<f64> = square.iter().copied().filter(|&x| x > 0.0).collect();
    if v.is_empty() || count == 0 {
        return Err(FlagError::Config(
            "alpha sweep needs a nonzero square function and count >= 1".into(),
        ));
    }
    v.sort_by(f64::total_cmp);
    let q = |t: f64| v[((v.len() - 1) as f64 * t.clamp(0.0, 1.0)).round() as usize];
    let (lo, hi) = (q(lo_quantile), q(hi_quantile));
    if count == 1 {
        return Ok(vec![lo]);
    }
    let r = (hi / lo).powf(1.0 / (count - 1) as f64);
    Ok((0..count).map(|i| lo * r.powi(i as i32)).collect())
}

/// One row of the interpolation experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InterpolationRow {
    pub p: f64,
    pub max_ratio: f64,
    pub endpoint: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InterpolationReport {
    pub operator: String,
    pub p1: f64,
    pub p2: f64,
    pub rows: Vec<InterpolationRow>,
    pub endpoint_max: f64,
    /// True when every intermediate ratio is within 10x the endpoint maximum.
    pub bounded: bool,
}

/// Ratios `|T f|_p / |f|_{H^p}` over a corpus for `p` in `{p2} + p_grid + {p1}`.
pub fn interpolation_experiment(
    label: &str,
    op: &dyn Fn(&SampledFunction) -> Result<SampledFunction>,
    p1: f64,
    p2: f64,
    p_grid: &[f64],
    corpus: &[SampledFunction],
    bank: &FilterBank,
    offset: u32,
) -> Result<InterpolationReport> {
    let lo = p_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = p_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if p_grid.is_empty() || !(p2 > 0.0 && p2 < lo && hi < p1 && p1.is_finite()) {
        return Err(FlagError::Domain(format!(
            "need 0 < p2 < min(pGrid) <= max(pGrid) < p1, got p2={p2}, p1={p1}, pGrid={p_grid:?}"
        )));
    }
    if corpus.is_empty() {
        return Err(FlagError::Config("corpus is empty".into()));
    }
    let images: Vec<SampledFunction> = corpus
        .iter()
        .map(|f| {
            same_grid(f.grid(), bank.grid())?;
            op(f)
        })
        .collect::<Result<_>>()?;
    let mut ps = vec![(p2, true)];
    ps.extend(p_grid.iter().map(|&p| (p, false)));
    ps.push((p1, true));
    let rows: Vec<InterpolationRow> = ps
        .into_iter()
        .map(|(p, endpoint)| {
            let mut max_ratio: f64 = 0.0;
            for (f, tf) in corpus.iter().zip(&images) {
                let den = hardy_type_norm(f, bank, p, offset)?;
                if den > 0.0 {
                    max_ratio = max_ratio.max(tf.lp_norm(p)? / den);
                }
            }
            Ok(InterpolationRow { p, max_ratio, endpoint })
        })
        .collect::<Result<_>>()?;
    let endpoint_max = rows
        .iter()
        .filter(|r| r.endpoint)
        .map(|r| r.max_ratio)
        .fold(0.0, f64::max);
    let bounded = rows
        .iter()
        .filter(|r| !r.endpoint)
        .all(|r| r.max_ratio <= 10.0 * endpoint_max);
    Ok(InterpolationReport {
        operator: label.to_string(),
        p1,
        p2,
        rows,
        endpoint_max,
        bounded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::build_compact_bank;
    use crate::grid::make_grid;
    use crate::transform::random_field;

    fn setup() -> (FilterBank, SampledFunction) {
        let b = build_compact_bank(make_grid(1, 1, 6).unwrap(), 1, 3).unwrap();
        let f = random_field(b.grid(), 3);
        (b, f)
    }

    #[test]
    fn exponent_domain() {
        let (b, f) = setup();
        assert!(matches!(
            cz_decompose(&f, &b, 1.0, 3, 0.9, 2.0, 1.2),
            Err(FlagError::Domain(_))
        ));
        assert!(matches!(
            cz_decompose(&f, &b, 1.0, 3, 2.5, 2.0, 0.7),
            Err(FlagError::Domain(_))
        ));
        assert!(matches!(
            cz_decompose(&f, &b, 0.0, 3, 0.9, 2.0, 0.7),
            Err(FlagError::Domain(_))
        ));
    }

    #[test]
    fn large_alpha_keeps_everything_good() {
        let (b, f) = setup();
        let (_, s, _) = cz_square_function(&f, &b, 3, 1e-12).unwrap();
        let top = s.iter().copied().fold(0.0, f64::max);
        let d = cz_decompose(&f, &b, 2.0 * top, 3, 0.9, 2.0, 0.7).unwrap();
        assert_eq!(d.bad.l2_norm(), 0.0);
        assert!(d.good.sub(&f).unwrap().l2_norm() < 1e-9 * f.l2_norm());
        assert_eq!(d.report.level_set_measures, vec![0.0]);
    }

    #[test]
    fn additivity_and_support() {
        let (b, f) = setup();
        let (_, s, _) = cz_square_function(&f, &b, 3, 1e-12).unwrap();
        for alpha in alpha_sweep(&s, 4, 0.1, 0.9).unwrap() {
            let d = cz_decompose(&f, &b, alpha, 3, 0.9, 2.0, 0.7).unwrap();
            assert!(d.report.additivity_error < 1e-9);
            assert_eq!(d.report.support_violations, 0);
            assert!(d.report.level_set_measures.windows(2).all(|w| w[1] <= w[0]));
            assert!(d.report.class_counts.len() >= 2 && d.report.class_counts[1..].iter().sum::<usize>() > 0);
        }
    }

    #[test]
    fn tiny_alpha_moves_everything_bad() {
        let (b, f) = setup();
        let (coeffs, s, _) = cz_square_function(&f, &b, 3, 1e-12).unwrap();
        let low = s.iter().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
        let d = cz_decompose(&f, &b, 0.5 * low, 3, 0.9, 2.0, 0.7).unwrap();
        assert_eq!(d.report.class_counts[0], 0);
        let mut lp_only = coeffs.map_entries(|_, _, _, _| Complex64::new(0.0, 0.0));
        lp_only.low_pass_mut().copy_from_slice(coeffs.low_pass());
        let lp = synthesize_discrete(&lp_only, &b).unwrap();
        assert!(d.bad.sub(&f.sub(&lp).unwrap()).unwrap().l2_norm() < 1e-9 * f.l2_norm());
    }

    #[test]
    fn interpolation_trivial_operators() {
        let (b, f) = setup();
        let corpus = vec![f.clone(), random_field(b.grid(), 8)];
        let zero = |g: &SampledFunction| Ok(SampledFunction::zeros(g.grid()));
        let r = interpolation_experiment("zero", &zero, 2.0, 0.7, &[0.8, 0.9, 1.0], &corpus, &b, 3).unwrap();
        assert!(r.rows.iter().all(|row| row.max_ratio == 0.0) && r.bounded);
        let id = |g: &SampledFunction| Ok(g.clone());
        let r = interpolation_experiment("identity", &id, 2.0, 0.7, &[0.8, 0.9, 1.0], &corpus, &b, 3).unwrap();
        assert!(
            r.rows
                .iter()
                .all(|row| row.max_ratio.is_finite() && row.max_ratio > 0.0)
                && r.bounded
        );
        assert!((r.rows.last().unwrap().max_ratio - 1.0).abs() < 1e-14);
        assert!(matches!(
            interpolation_experiment("identity", &id, 2.0, 0.9, &[0.8], &corpus, &b, 3),
            Err(FlagError::Domain(_))
        ));
    }
}
