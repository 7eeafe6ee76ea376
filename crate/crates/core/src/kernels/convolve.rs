//! Product-to-flag projection and truncated convolution on the torus.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::quad::adaptive;
use super::{Geometry, KernelSpec};
use crate::error::{FlagError, Result};
use crate::fft::LatticeFft;
use crate::filters::FilterBank;
use crate::grid::{l2_norm_slice, same_grid, Grid, SampledFunction};
use crate::maximal::strong_maximal;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `K(x, y) = int K#(x, y - z, z) dz` as a flag kernel evaluated by adaptive
/// quadrature, split at `z = 0` and `z = y`, relative tolerance `1e-8`.
pub fn project_to_flag(ksharp: &KernelSpec) -> Result<KernelSpec> {
    if ksharp.geometry() != Geometry::LiftedProduct {
        return Err(FlagError::Kernel(format!(
            "projection needs a kernel on R^2 x R, '{}' is {}",
            ksharp.name(),
            ksharp.geometry().as_str()
        )));
    }
    let k = ksharp.clone();
    let name = format!("project({})", ksharp.name());
    Ok(KernelSpec::fallible(name, Geometry::Flag, move |p| {
        projection_integral(&k, p[0], p[1])
    }))
}

fn projection_integral(k: &KernelSpec, x: f64, y: f64) -> Result<Complex64> {
    let (ax, ay) = (x.abs(), y.abs());
    let scale = ax + ay;
    if scale == 0.0 {
        return Err(FlagError::Kernel("projected kernel is singular at the origin".into()));
    }
    // Pairs z with -z so a 1/z singularity is integrated as a principal value.
    let h = |z: f64| -> Result<Complex64> { Ok(k.eval(&[x, y - z, z])? + k.eval(&[x, y + z, -z])?) };
    let mut breaks = vec![0.0, 0.25 * scale];
    if ay > 0.0 {
        breaks.extend([ay - 0.5 * ax, ay, ay + 0.5 * ax]);
    }
    breaks.push(2.0 * scale);
    breaks.retain(|&b| b >= 0.0);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let top = *breaks.last().expect("breaks are nonempty");
    // Tail `z = top / (1 - u)` for `u` in `(0, 1)`.
    breaks.extend([top + 0.5, top + 0.9, top + 1.0]);
    let value = adaptive(&breaks, 1e-8, 4000, |s| {
        if s <= top {
            h(s)
        } else {
            let u = s - top;
            let z = top / (1.0 - u);
            Ok(h(z)? * (top / ((1.0 - u) * (1.0 - u))))
        }
    });
    value.map_err(|e| FlagError::Integration(format!("projection at ({x}, {y}): {e}")))
}

/// Convolution with a kernel truncated to `|(x, y)| > eps`, as a Fourier
/// multiplier on the torus. Lattice points where the kernel is singular are
/// omitted.
#[derive(Debug, Clone)]
pub struct TruncatedOperator {
    grid: Grid,
    eps: f64,
    kernel: String,
    multiplier: Vec<Complex64>,
}

impl TruncatedOperator {
    pub fn new(grid: Grid, k: &KernelSpec, eps: f64) -> Result<Self> {
        if k.dim() != 2 || grid.dim() != 2 {
            return Err(FlagError::Kernel(format!(
                "truncated convolution needs a kernel and grid on R x R (kernel '{}')",
                k.name()
            )));
        }
        let h = grid.spacing();
        if !(eps >= h * (1.0 - 1e-12)) || !eps.is_finite() {
            return Err(FlagError::Truncation(format!(
                "eps {eps} is below the grid spacing {h}"
            )));
        }
        let mut samples = vec![ZERO; grid.len()];
        for (i, s) in samples.iter_mut().enumerate() {
            let c = grid.coords(i);
            let p = [grid.displacement(c[0]) as f64 * h, grid.displacement(c[1]) as f64 * h];
            if p[0].hypot(p[1]) <= eps * (1.0 + 1e-9) {
                continue;
            }
            let v = k.eval_raw(&p)?;
            if v.re.is_finite() && v.im.is_finite() {
                *s = v * (h * h);
            }
        }
        let multiplier = LatticeFft::for_grid(grid).forward_vec(&samples);
        Ok(Self {
            grid,
            eps,
            kernel: k.name().to_string(),
            multiplier,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn multiplier(&self) -> &[Complex64] {
        &self.multiplier
    }

    pub fn apply(&self, f: &SampledFunction) -> Result<SampledFunction> {
        same_grid(f.grid(), self.grid)?;
        let fft = LatticeFft::for_grid(self.grid);
        let mut v = fft.forward_vec(f.values());
        for (a, m) in v.iter_mut().zip(&self.multiplier) {
            *a *= m;
        }
        fft.inverse(&mut v);
        SampledFunction::new(self.grid, v)
    }

    fn apply_adjoint(&self, f: &SampledFunction) -> Result<SampledFunction> {
        let fft = LatticeFft::for_grid(self.grid);
        let mut v = fft.forward_vec(f.values());
        for (a, m) in v.iter_mut().zip(&self.multiplier) {
            *a *= m.conj();
        }
        fft.inverse(&mut v);
        SampledFunction::new(self.grid, v)
    }

    /// Exact `L^2 -> L^2` norm: the largest multiplier modulus.
    pub fn norm(&self) -> f64 {
        self.multiplier.iter().map(|m| m.norm()).fold(0.0, f64::max)
    }

    /// Power-iteration estimate of the norm.
    pub fn power_norm(&self, steps: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let vol = self.grid.cell_volume();
        let v: Vec<Complex64> = (0..self.grid.len())
            .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
            .collect();
        let mut v = SampledFunction::new(self.grid, v)?;
        let mut est = 0.0;
        for _ in 0..steps.max(1) {
            let n = v.l2_norm();
            if n == 0.0 {
                return Ok(0.0);
            }
            v = v.scale(Complex64::new(1.0 / n, 0.0));
            let w = self.apply_adjoint(&self.apply(&v)?)?;
            est = l2_norm_slice(w.values(), vol).sqrt();
            v = w;
        }
        Ok(est)
    }
}

/// `(K chi_{|.| > eps}) * f`.
pub fn flag_convolve(f: &SampledFunction, k: &KernelSpec, eps: f64) -> Result<SampledFunction> {
    TruncatedOperator::new(f.grid(), k, eps)?.apply(f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MajorantReport {
    /// Largest `|psi_{j,k} * T f| / M_s f` over all scales and points.
    pub fitted_c: f64,
    pub per_scale: Vec<(u32, u32, f64)>,
}

/// Pointwise majorant `|psi_{j,k} * T f| <= C M_s f` with fitted `C`.
pub fn majorant_check(f: &SampledFunction, op: &TruncatedOperator, bank: &FilterBank) -> Result<MajorantReport> {
    same_grid(f.grid(), bank.grid())?;
    let grid = f.grid();
    let tf = op.apply(f)?;
    let ms = strong_maximal(f).abs();
    let floor = 1e-12 * ms.iter().copied().fold(0.0, f64::max);
    let fft = LatticeFft::for_grid(grid);
    let spectrum = fft.forward_vec(tf.values());
    let mut per_scale = Vec::new();
    let mut fitted_c: f64 = 0.0;
    for (j, k) in bank.scales() {
        let lift = bank.lift(j, k)?;
        let mut v: Vec<Complex64> = spectrum.iter().zip(&lift).map(|(a, &l)| a * l).collect();
        fft.inverse(&mut v);
        let c = v
            .iter()
            .zip(&ms)
            .filter(|(_, &m)| m > floor)
            .map(|(a, &m)| a.norm() / m)
            .fold(0.0, f64::max);
        per_scale.push((j, k, c));
        fitted_c = fitted_c.max(c);
    }
    Ok(MajorantReport { fitted_c, per_scale })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConvolutionReport {
    pub kernel: String,
    pub eps: f64,
    pub level: u32,
    pub operator_norm: f64,
    pub power_estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub majorant_c: Option<f64>,
}

impl TruncatedOperator {
    pub fn report(&self, majorant: Option<&MajorantReport>) -> Result<ConvolutionReport> {
        Ok(ConvolutionReport {
            kernel: self.kernel.clone(),
            eps: self.eps,
            level: self.grid.level(),
            operator_norm: self.norm(),
            power_estimate: self.power_norm(30, 1)?,
            majorant_c: majorant.map(|m| m.fitted_c),
        })
    }
}
