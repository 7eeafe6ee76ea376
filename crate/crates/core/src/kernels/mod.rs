//! Closed-form kernels on `R x R` and `R^2 x R`, their certification against
//! product and flag size and cancellation conditions, projection from
//! product to flag kernels, and truncated flag convolution.
//!
//! Kernels here are restricted to one dimension per factor.

mod bumps;
mod convolve;
pub mod expr;
pub mod quad;
mod validate;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FlagError, Result};

pub(crate) use bumps::standard as standard_bump;
pub use bumps::{bump_family, Bump};
pub use convolve::{
    flag_convolve, majorant_check, project_to_flag, ConvolutionReport, MajorantReport, TruncatedOperator,
};
pub use validate::{
    validate_flag_kernel, validate_flag_kernel_with, validate_product_kernel, validate_product_kernel_with,
    ConstantFit, JointCell, KernelReport, ValidationOptions,
};

/// Where a kernel is allowed to be singular.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Geometry {
    /// `{x = 0}` in `R x R`.
    Flag,
    /// `{x = 0} u {y = 0}` in `R x R`.
    Product,
    /// `{(0, 0, z)} u {(x, y, 0)}` in `R^2 x R`.
    LiftedProduct,
}

impl Geometry {
    pub fn dim(&self) -> usize {
        match self {
            Geometry::Flag | Geometry::Product => 2,
            Geometry::LiftedProduct => 3,
        }
    }

    /// Distance from `p` to the singular set.
    pub fn singular_distance(&self, p: &[f64]) -> f64 {
        match self {
            Geometry::Flag => p[0].abs(),
            Geometry::Product => p[0].abs().min(p[1].abs()),
            Geometry::LiftedProduct => p[0].hypot(p[1]).min(p[2].abs()),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Geometry::Flag => "flag",
            Geometry::Product => "product",
            Geometry::LiftedProduct => "lifted-product",
        }
    }
}

impl std::str::FromStr for Geometry {
    type Err = FlagError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flag" => Ok(Geometry::Flag),
            "product" => Ok(Geometry::Product),
            "lifted-product" | "lifted" => Ok(Geometry::LiftedProduct),
            other => Err(FlagError::Config(format!("unknown kernel geometry '{other}'"))),
        }
    }
}

type Evaluator = Arc<dyn Fn(&[f64]) -> Result<Complex64> + Send + Sync>;

/// A kernel evaluator together with its singular geometry.
#[derive(Clone)]
pub struct KernelSpec {
    name: String,
    geometry: Geometry,
    evaluator: Evaluator,
    /// Cutoff radius used when the kernel is convolved.
    pub truncation_eps: f64,
    /// Highest derivative order certified.
    pub derivative_order_cap: u32,
}

impl fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelSpec")
            .field("name", &self.name)
            .field("geometry", &self.geometry)
            .field("truncation_eps", &self.truncation_eps)
            .field("derivative_order_cap", &self.derivative_order_cap)
            .finish()
    }
}

impl KernelSpec {
    pub fn new(
        name: impl Into<String>,
        geometry: Geometry,
        f: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self::fallible(name, geometry, move |p| Ok(f(p)))
    }

    pub fn fallible(
        name: impl Into<String>,
        geometry: Geometry,
        f: impl Fn(&[f64]) -> Result<Complex64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            geometry,
            evaluator: Arc::new(f),
            truncation_eps: 0.0,
            derivative_order_cap: 2,
        }
    }

    /// Kernel from the expression grammar; three-variable expressions default
    /// to the lifted product geometry, others to the flag geometry.
    pub fn from_expression(src: &str, geometry: Option<Geometry>) -> Result<Self> {
        let e = expr::Expr::parse(src)?;
        let geometry = geometry.unwrap_or(if e.arity() == 3 {
            Geometry::LiftedProduct
        } else {
            Geometry::Flag
        });
        if e.arity() > geometry.dim() {
            return Err(FlagError::Kernel(format!(
                "expression '{src}' uses z but geometry {} is two-dimensional",
                geometry.as_str()
            )));
        }
        Ok(Self::new(src, geometry, move |p| e.eval(p)))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    /// Value at `p`, which may be non-finite on the singular set.
    pub fn eval_raw(&self, p: &[f64]) -> Result<Complex64> {
        if p.len() != self.dim() {
            return Err(FlagError::Shape(format!(
                "kernel '{}' takes {} coordinates, got {}",
                self.name,
                self.dim(),
                p.len()
            )));
        }
        (self.evaluator)(p)
    }

    /// Value at `p`; non-finite values are kernel errors.
    pub fn eval(&self, p: &[f64]) -> Result<Complex64> {
        let v = self.eval_raw(p)?;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(FlagError::Kernel(format!(
                "kernel '{}' is not finite at {p:?}",
                self.name
            )));
        }
        Ok(v)
    }

    /// `a * self + b * other` on a common geometry.
    pub fn combine(&self, a: Complex64, other: &KernelSpec, b: Complex64) -> Result<KernelSpec> {
        if self.geometry != other.geometry {
            return Err(FlagError::Kernel("cannot combine kernels of different geometry".into()));
        }
        let (f, g) = (self.evaluator.clone(), other.evaluator.clone());
        Ok(KernelSpec::fallible(
            format!("({a})*{} + ({b})*{}", self.name, other.name),
            self.geometry,
            move |p| Ok(a * f(p)? + b * g(p)?),
        ))
    }
}

pub const BUILTIN_KERNELS: [&str; 6] = [
    "k1-product",
    "k2-flag",
    "k2-cancellative",
    "lifted-product",
    "smooth-bump",
    "zero",
];

/// Built-in kernel by registry name.
pub fn builtin(name: &str) -> Result<KernelSpec> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    Ok(match name {
        "k1-product" => KernelSpec::new(name, Geometry::Product, move |p| c(1.0 / (p[0] * p[1]), 0.0)),
        "k2-flag" => KernelSpec::new(name, Geometry::Flag, move |p| {
            c(1.0, 0.0) / (c(p[0], 0.0) * c(p[0], p[1]))
        }),
        "k2-cancellative" => KernelSpec::new(name, Geometry::Flag, move |p| {
            let (x, y) = (p[0], p[1]);
            c(0.0, -y / (x * (x * x + y * y)))
        }),
        "lifted-product" => KernelSpec::new(name, Geometry::LiftedProduct, move |p| {
            let w = c(p[0], p[1]);
            c(1.0, 0.0) / (w * w * p[2])
        }),
        "smooth-bump" => smooth_bump(1.0),
        "zero" => KernelSpec::new(name, Geometry::Flag, |_| Complex64::new(0.0, 0.0)),
        other => {
            return Err(FlagError::Kernel(format!(
                "unknown kernel '{other}'; built-ins are {}",
                BUILTIN_KERNELS.join(", ")
            )))
        }
    })
}

/// Unit-mass radial bump of the given radius on `R^2`.
pub fn smooth_bump(radius: f64) -> KernelSpec {
    let mass = bumps::disk_mass();
    KernelSpec::new("smooth-bump", Geometry::Flag, move |p| {
        let r2 = (p[0] * p[0] + p[1] * p[1]) / (radius * radius);
        Complex64::new(bumps::standard(r2) / (mass * radius * radius), 0.0)
    })
}

/// One-dimensional central-difference weights for derivative `order`.
fn stencil(order: u32) -> &'static [(i32, f64)] {
    match order {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        _ => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
    }
}

/// Mixed partial `prod_a d^{orders[a]}` of `f` at `p` by tensor central
/// differences with step `h`; orders up to 3.
pub(crate) fn partial(
    mut f: impl FnMut(&[f64]) -> Result<Complex64>,
    p: &[f64],
    orders: &[u32],
    h: f64,
) -> Result<Complex64> {
    let stencils: Vec<&[(i32, f64)]> = orders.iter().map(|&o| stencil(o)).collect();
    let mut idx = vec![0usize; p.len()];
    let mut q = p.to_vec();
    let mut total = Complex64::new(0.0, 0.0);
    loop {
        let mut w = 1.0;
        for a in 0..p.len() {
            let (off, wa) = stencils[a][idx[a]];
            q[a] = p[a] + off as f64 * h;
            w *= wa;
        }
        total += f(&q)? * w;
        let mut a = p.len();
        loop {
            if a == 0 {
                let scale: i32 = orders.iter().map(|&o| o as i32).sum();
                return Ok(total / h.powi(scale));
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
