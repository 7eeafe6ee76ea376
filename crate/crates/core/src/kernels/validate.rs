//! Fitted constants for size and cancellation conditions on dyadic sample
//! ladders, compared across two refinements.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bumps::{bump_family, Bump};
use super::quad::{graded_breaks, GaussLegendre};
use super::{partial, stencil, Geometry, KernelSpec};
use crate::error::{FlagError, Result};

const TAU: f64 = 2.0 * std::f64::consts::PI;
const ANGLES: [f64; 5] = [0.3, 1.4, 2.2, 3.9, 5.3];
const POLAR_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ValidationOptions {
    /// Coarse ladder spans `2^-depth ..= 2^depth`; the fine one adds two octaves each way.
    pub depth: u32,
    /// Samples per octave.
    pub mantissas: usize,
    pub cancellation: bool,
    /// Gauss-Legendre points per panel on the coarse pass.
    pub quad_order: usize,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            depth: 3,
            mantissas: 2,
            cancellation: true,
            quad_order: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConstantFit {
    pub condition: String,
    pub order: Vec<u32>,
    pub coarse: f64,
    pub fine: f64,
    pub ratio: f64,
    pub stable: bool,
}

impl ConstantFit {
    fn new(condition: &str, order: Vec<u32>, coarse: f64, fine: f64) -> Self {
        let ratio = if coarse == 0.0 && fine == 0.0 {
            1.0
        } else {
            fine / coarse
        };
        let stable = coarse.is_finite() && fine.is_finite() && (0.5..=1.5).contains(&ratio);
        Self {
            condition: condition.to_string(),
            order,
            coarse,
            fine,
            ratio,
            stable,
        }
    }
}

/// Joint-dilation constant for one `(delta1, delta2)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct JointCell {
    pub delta1: f64,
    pub delta2: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct KernelReport {
    pub kernel: String,
    pub bounds: String,
    pub fits: Vec<ConstantFit>,
    pub joint_cells: Vec<JointCell>,
    pub passes: bool,
    /// Largest fine/coarse ratio over all fits.
    pub max_ratio: f64,
    /// Verdict of the product conditions, reported alongside flag validation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub product_verdict: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bounds {
    Flag,
    Product,
    Lifted,
}

impl Bounds {
    fn as_str(&self) -> &'static str {
        match self {
            Bounds::Flag => "flag",
            Bounds::Product => "product",
            Bounds::Lifted => "lifted-product",
        }
    }
}

struct Level {
    depth: u32,
    mantissas: usize,
    gl: GaussLegendre,
}

impl Level {
    fn ladder(&self) -> Vec<f64> {
        let d = self.depth as i32;
        let m = self.mantissas;
        (-d..=d)
            .flat_map(|i| (0..m).map(move |t| 2f64.powi(i) * 2f64.powf(t as f64 / m as f64)))
            .collect()
    }

    fn signed_ladder(&self) -> Vec<f64> {
        self.ladder().into_iter().flat_map(|v| [v, -v]).collect()
    }
}

fn deltas() -> Vec<f64> {
    (-4..=4).map(|k| 2f64.powi(k)).collect()
}

fn joint_deltas(bounds: Bounds) -> Vec<f64> {
    let ks: &[i32] = if bounds == Bounds::Lifted {
        &[-4, 0, 4]
    } else {
        &[-4, -2, 0, 2, 4]
    };
    ks.iter().map(|&k| 2f64.powi(k)).collect()
}

fn orders(dim: usize, cap: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let total = (cap + 1).pow(dim as u32);
    for flat in 0..total {
        let mut rest = flat;
        let o: Vec<u32> = (0..dim)
            .map(|_| {
                let v = rest % (cap + 1);
                rest /= cap + 1;
                v
            })
            .collect();
        if o.iter().sum::<u32>() <= cap {
            out.push(o);
        }
    }
    out.sort_by_key(|o| (o.iter().sum::<u32>(), o.clone()));
    out
}

fn par_max(values: Vec<Result<Vec<f64>>>, len: usize) -> Result<Vec<f64>> {
    let mut best = vec![0.0f64; len];
    for v in values {
        for (b, x) in best.iter_mut().zip(v?) {
            *b = b.max(x);
        }
    }
    Ok(best)
}

/// Size constants for every order at one refinement level.
fn size_constants(k: &KernelSpec, bounds: Bounds, ords: &[Vec<u32>], level: &Level) -> Result<Vec<f64>> {
    let points: Vec<Vec<f64>> = match bounds {
        Bounds::Lifted => {
            let z = level.signed_ladder();
            level
                .ladder()
                .iter()
                .flat_map(|&r| ANGLES.iter().map(move |&t| (r * t.cos(), r * t.sin())))
                .flat_map(|(x, y)| z.iter().map(move |&z| vec![x, y, z]))
                .collect()
        }
        _ => {
            let s = level.signed_ladder();
            s.iter().flat_map(|&x| s.iter().map(move |&y| vec![x, y])).collect()
        }
    };
    let rows: Vec<Result<Vec<f64>>> = points
        .par_iter()
        .map(|p| {
            let h = k.geometry().singular_distance(p) / 16.0;
            ords.iter()
                .map(|o| {
                    let v = partial(|q| k.eval(q), p, o, h)?.norm();
                    Ok(v * inverse_size_weight(bounds, p, o))
                })
                .collect()
        })
        .collect();
    par_max(rows, ords.len())
}

fn inverse_size_weight(bounds: Bounds, p: &[f64], o: &[u32]) -> f64 {
    let (ax, ay) = (p[0].abs(), p[1].abs());
    match bounds {
        Bounds::Flag => ax.powi(1 + o[0] as i32) * (ax + ay).powi(1 + o[1] as i32),
        Bounds::Product => ax.powi(1 + o[0] as i32) * ay.powi(1 + o[1] as i32),
        Bounds::Lifted => (ax + ay).powi(2 + (o[0] + o[1]) as i32) * p[2].abs().powi(1 + o[2] as i32),
    }
}

/// Half-width of the stencil grid needed for derivative orders up to `cap`.
fn reach(cap: u32) -> i32 {
    if cap <= 2 {
        1
    } else {
        2
    }
}

/// Applies the tensor stencil for `o` to values sampled on a `(2r+1)^d` grid.
fn stencil_apply(values: &[Complex64], r: i32, o: &[u32], h: f64) -> Complex64 {
    let side = (2 * r + 1) as usize;
    let mut total = Complex64::new(0.0, 0.0);
    let stencils: Vec<&[(i32, f64)]> = o.iter().map(|&a| stencil(a)).collect();
    let mut idx = vec![0usize; o.len()];
    loop {
        let mut flat = 0;
        let mut w = 1.0;
        for a in 0..o.len() {
            let (off, wa) = stencils[a][idx[a]];
            flat = flat * side + (off + r) as usize;
            w *= wa;
        }
        total += values[flat] * w;
        let mut a = o.len();
        loop {
            if a == 0 {
                return total / h.powi(o.iter().sum::<u32>() as i32);
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < stencils[a].len() {
                break;
            }
            idx[a] = 0;
        }
    }
}

/// Symmetric principal-value integral `int_{|t| < upper} g(t) dt`.
fn pv_integral(
    gl: &GaussLegendre,
    scale: f64,
    upper: f64,
    mut g: impl FnMut(f64) -> Result<Complex64>,
) -> Result<Complex64> {
    let breaks = graded_breaks(scale.min(upper), upper, 14);
    let mut err = None;
    let v = gl.composite(&breaks, |t| match (g(t), g(-t)) {
        (Ok(a), Ok(b)) => a + b,
        (Err(e), _) | (_, Err(e)) => {
            err.get_or_insert(e);
            Complex64::new(0.0, 0.0)
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// `|int d_x^a K(x, y) phi(delta y) dy| |x|^{1+a}` (axis 0) or the mirrored
/// condition in `x` (axis 1), maximized over the ladder.
fn cancellation_1d(k: &KernelSpec, axis: usize, cap: u32, level: &Level) -> Result<Vec<f64>> {
    let r = reach(cap);
    let fam = bump_family(1);
    let jobs: Vec<(f64, f64, &Bump)> = level
        .signed_ladder()
        .into_iter()
        .flat_map(|s| {
            deltas()
                .into_iter()
                .flat_map(move |d| fam.iter().map(move |b| (s, d, b)))
        })
        .collect();
    let rows: Vec<Result<Vec<f64>>> = jobs
        .par_iter()
        .map(|&(s, delta, bump)| {
            let h = s.abs() / 16.0;
            let samples: Vec<Complex64> = (-r..=r)
                .map(|off| {
                    let s2 = s + off as f64 * h;
                    pv_integral(&level.gl, s.abs(), 1.0 / delta, |t| {
                        let p = if axis == 0 { [s2, t] } else { [t, s2] };
                        Ok(k.eval(&p)? * bump.eval(&[delta * t]))
                    })
                })
                .collect::<Result<_>>()?;
            Ok((0..=cap)
                .map(|a| stencil_apply(&samples, r, &[a], h).norm() * s.abs().powi(1 + a as i32))
                .collect())
        })
        .collect();
    par_max(rows, cap as usize + 1)
}

/// Renormalized `int int K(x, y) phi(delta1 x, delta2 y)` per joint cell.
fn joint_2d(k: &KernelSpec, level: &Level) -> Result<Vec<JointCell>> {
    let fam = bump_family(2);
    let ds = joint_deltas(Bounds::Flag);
    let cells: Vec<(f64, f64)> = ds.iter().flat_map(|&a| ds.iter().map(move |&b| (a, b))).collect();
    cells
        .par_iter()
        .map(|&(d1, d2)| {
            let mut best: f64 = 0.0;
            for bump in fam {
                let phi0 = bump.eval(&[0.0, 0.0]);
                let mut err = None;
                let outer = graded_breaks(1.0f64.min(1.0 / d2), 1.0 / d2, 10);
                let v = level.gl.composite(&outer, |y| {
                    let mut inner = graded_breaks(y.min(1.0 / d1), 1.0 / d1, 10);
                    if 1.0 < 1.0 / d1 {
                        inner.push(1.0);
                        inner.sort_by(f64::total_cmp);
                        inner.dedup();
                    }
                    level.gl.composite(&inner, |x| {
                        let cut = if x < 1.0 && y < 1.0 { phi0 } else { 0.0 };
                        let mut acc = Complex64::new(0.0, 0.0);
                        for (sx, sy) in [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
                            match k.eval(&[sx * x, sy * y]) {
                                Ok(kv) => acc += kv * (bump.eval(&[sx * d1 * x, sy * d2 * y]) - cut),
                                Err(e) => {
                                    err.get_or_insert(e);
                                }
                            }
                        }
                        acc
                    })
                });
                if let Some(e) = err {
                    return Err(e);
                }
                best = best.max(v.norm());
            }
            Ok(JointCell {
                delta1: d1,
                delta2: d2,
                value: best,
            })
        })
        .collect()
}

/// `int K(x, y, z) phi(delta z) dz` cancellation with `(x, y)`-derivatives.
fn lifted_z_cancellation(k: &KernelSpec, ords: &[Vec<u32>], cap: u32, level: &Level) -> Result<Vec<f64>> {
    let r = reach(cap);
    let fam = bump_family(1);
    let xy: Vec<(f64, f64)> = level
        .ladder()
        .iter()
        .flat_map(|&rho| ANGLES.iter().map(move |&t| (rho * t.cos(), rho * t.sin())))
        .collect();
    let jobs: Vec<((f64, f64), f64, &Bump)> = xy
        .into_iter()
        .flat_map(|p| {
            deltas()
                .into_iter()
                .flat_map(move |d| fam.iter().map(move |b| (p, d, b)))
        })
        .collect();
    let xy_ords: Vec<&Vec<u32>> = ords.iter().filter(|o| o[2] == 0).collect();
    let rows: Vec<Result<Vec<f64>>> = jobs
        .par_iter()
        .map(|&((x, y), delta, bump)| {
            let h = x.hypot(y) / 16.0;
            let mut samples = Vec::new();
            for ox in -r..=r {
                for oy in -r..=r {
                    let (x2, y2) = (x + ox as f64 * h, y + oy as f64 * h);
                    samples.push(pv_integral(&level.gl, 0.5 / delta, 1.0 / delta, |z| {
                        Ok(k.eval(&[x2, y2, z])? * bump.eval(&[delta * z]))
                    })?);
                }
            }
            Ok(xy_ords
                .iter()
                .map(|o| {
                    stencil_apply(&samples, r, &o[..2], h).norm() * (x.abs() + y.abs()).powi(2 + (o[0] + o[1]) as i32)
                })
                .collect())
        })
        .collect();
    par_max(rows, xy_ords.len())
}

/// Polar `int_{|w| < upper} g(w) dw` over `R^2`.
fn polar_integral(
    gl: &GaussLegendre,
    upper: f64,
    mut g: impl FnMut(f64, f64) -> Result<Complex64>,
) -> Result<Complex64> {
    let breaks = graded_breaks(0.5 * upper, upper, 16);
    let mut err = None;
    let dt = TAU / POLAR_NODES as f64;
    let v = gl.composite(&breaks, |rho| {
        let mut acc = Complex64::new(0.0, 0.0);
        for t in 0..POLAR_NODES {
            let th = (t as f64 + 0.5) * dt;
            match g(rho * th.cos(), rho * th.sin()) {
                Ok(v) => acc += v,
                Err(e) => {
                    err.get_or_insert(e);
                }
            }
        }
        acc * rho * dt
    });
    match err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// `int int d_z^c K(x, y, z) phi(delta x, delta y) dx dy` cancellation.
fn lifted_xy_cancellation(k: &KernelSpec, cap: u32, level: &Level) -> Result<Vec<f64>> {
    let r = reach(cap);
    let fam = bump_family(2);
    let jobs: Vec<(f64, f64, &Bump)> = level
        .signed_ladder()
        .into_iter()
        .flat_map(|z| {
            deltas()
                .into_iter()
                .flat_map(move |d| fam.iter().map(move |b| (z, d, b)))
        })
        .collect();
    let rows: Vec<Result<Vec<f64>>> = jobs
        .par_iter()
        .map(|&(z, delta, bump)| {
            let h = z.abs() / 16.0;
            let samples: Vec<Complex64> = (-r..=r)
                .map(|off| {
                    let z2 = z + off as f64 * h;
                    polar_integral(&level.gl, 1.0 / delta, |x, y| {
                        Ok(k.eval(&[x, y, z2])? * bump.eval(&[delta * x, delta * y]))
                    })
                })
                .collect::<Result<_>>()?;
            Ok((0..=cap)
                .map(|c| stencil_apply(&samples, r, &[c], h).norm() * z.abs().powi(1 + c as i32))
                .collect())
        })
        .collect();
    par_max(rows, cap as usize + 1)
}

fn joint_lifted(k: &KernelSpec, level: &Level) -> Result<Vec<JointCell>> {
    let fam = bump_family(3);
    let ds = joint_deltas(Bounds::Lifted);
    let cells: Vec<(f64, f64)> = ds.iter().flat_map(|&a| ds.iter().map(move |&b| (a, b))).collect();
    cells
        .par_iter()
        .map(|&(d1, d2)| {
            let mut best: f64 = 0.0;
            for bump in fam {
                let v = pv_integral(&level.gl, 0.5 / d2, 1.0 / d2, |z| {
                    polar_integral(&level.gl, 1.0 / d1, |x, y| {
                        Ok(k.eval(&[x, y, z])? * bump.eval(&[d1 * x, d1 * y, d2 * z]))
                    })
                })?;
                best = best.max(v.norm());
            }
            Ok(JointCell {
                delta1: d1,
                delta2: d2,
                value: best,
            })
        })
        .collect()
}

struct Measured {
    size: Vec<f64>,
    first: Vec<f64>,
    second: Vec<f64>,
    joint: Vec<JointCell>,
}

fn measure(k: &KernelSpec, bounds: Bounds, ords: &[Vec<u32>], cap: u32, level: &Level, canc: bool) -> Result<Measured> {
    let size = size_constants(k, bounds, ords, level)?;
    if !canc {
        return Ok(Measured {
            size,
            first: vec![],
            second: vec![],
            joint: vec![],
        });
    }
    Ok(match bounds {
        Bounds::Lifted => Measured {
            size,
            first: lifted_z_cancellation(k, ords, cap, level)?,
            second: lifted_xy_cancellation(k, cap, level)?,
            joint: joint_lifted(k, level)?,
        },
        _ => Measured {
            size,
            first: cancellation_1d(k, 0, cap, level)?,
            second: cancellation_1d(k, 1, cap, level)?,
            joint: joint_2d(k, level)?,
        },
    })
}

fn run(k: &KernelSpec, bounds: Bounds, opts: &ValidationOptions) -> Result<KernelReport> {
    let cap = k.derivative_order_cap;
    if !(1..=3).contains(&cap) {
        return Err(FlagError::Config(format!(
            "derivative order cap must lie in 1..=3, got {cap}"
        )));
    }
    if opts.mantissas == 0 || opts.quad_order == 0 {
        return Err(FlagError::Config(
            "sample budget and quadrature order must be positive".into(),
        ));
    }
    let dim = if bounds == Bounds::Lifted { 3 } else { 2 };
    let ords = orders(dim, cap);
    let coarse = Level {
        depth: opts.depth,
        mantissas: opts.mantissas,
        gl: GaussLegendre::new(opts.quad_order),
    };
    let fine = Level {
        depth: opts.depth + 2,
        mantissas: opts.mantissas,
        gl: GaussLegendre::new(opts.quad_order + 4),
    };
    let a = measure(k, bounds, &ords, cap, &coarse, opts.cancellation)?;
    let b = measure(k, bounds, &ords, cap, &fine, opts.cancellation)?;
    let mut fits: Vec<ConstantFit> = ords
        .iter()
        .zip(a.size.iter().zip(&b.size))
        .map(|(o, (&c, &f))| ConstantFit::new("size", o.clone(), c, f))
        .collect();
    if opts.cancellation {
        let (first_name, second_name) = match bounds {
            Bounds::Lifted => ("cancellation-z", "cancellation-xy"),
            _ => ("cancellation-y", "cancellation-x"),
        };
        let first_orders: Vec<Vec<u32>> = match bounds {
            Bounds::Lifted => ords.iter().filter(|o| o[2] == 0).map(|o| o[..2].to_vec()).collect(),
            _ => (0..=cap).map(|a| vec![a]).collect(),
        };
        for (o, (&c, &f)) in first_orders.into_iter().zip(a.first.iter().zip(&b.first)) {
            fits.push(ConstantFit::new(first_name, o, c, f));
        }
        for (o, (&c, &f)) in (0..=cap).zip(a.second.iter().zip(&b.second)) {
            fits.push(ConstantFit::new(second_name, vec![o], c, f));
        }
        let jc = a.joint.iter().map(|c| c.value).fold(0.0, f64::max);
        let jf = b.joint.iter().map(|c| c.value).fold(0.0, f64::max);
        fits.push(ConstantFit::new("joint", vec![], jc, jf));
    }
    let passes = fits.iter().all(|f| f.stable);
    let max_ratio = fits.iter().map(|f| f.ratio).fold(0.0, f64::max);
    Ok(KernelReport {
        kernel: k.name().to_string(),
        bounds: bounds.as_str().to_string(),
        fits,
        joint_cells: b.joint,
        passes,
        max_ratio,
        product_verdict: None,
    })
}

fn budget_options(sample_budget: usize) -> ValidationOptions {
    ValidationOptions {
        mantissas: sample_budget.clamp(1, 8),
        ..ValidationOptions::default()
    }
}

/// Product conditions: on `R x R` for two-dimensional kernels, on
/// `R^2 x R` for lifted kernels.
pub fn validate_product_kernel(k: &KernelSpec, sample_budget: usize) -> Result<KernelReport> {
    validate_product_kernel_with(k, &budget_options(sample_budget))
}

pub fn validate_product_kernel_with(k: &KernelSpec, opts: &ValidationOptions) -> Result<KernelReport> {
    let bounds = if k.geometry() == Geometry::LiftedProduct {
        Bounds::Lifted
    } else {
        Bounds::Product
    };
    run(k, bounds, opts)
}

/// Flag conditions, with the product verdict reported alongside.
pub fn validate_flag_kernel(k: &KernelSpec, sample_budget: usize) -> Result<KernelReport> {
    validate_flag_kernel_with(k, &budget_options(sample_budget))
}

pub fn validate_flag_kernel_with(k: &KernelSpec, opts: &ValidationOptions) -> Result<KernelReport> {
    if k.dim() != 2 {
        return Err(FlagError::Kernel(format!(
            "flag validation needs a kernel on R x R, '{}' is {}",
            k.name(),
            k.geometry().as_str()
        )));
    }
    let mut report = run(k, Bounds::Flag, opts)?;
    report.product_verdict = Some(run(k, Bounds::Product, opts)?.passes);
    Ok(report)
}
