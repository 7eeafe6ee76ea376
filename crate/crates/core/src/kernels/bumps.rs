//! A fixed family of normalized bump functions on `R^1`, `R^2` and `R^3`.

use std::sync::OnceLock;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use super::partial;
use super::quad::GaussLegendre;

/// `exp(-1 / (1 - r^2))` inside the unit ball.
pub(crate) fn standard(r2: f64) -> f64 {
    if r2 < 1.0 {
        (-1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

/// Integral of the standard bump over the unit disk.
pub(crate) fn disk_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        let gl = GaussLegendre::new(32);
        let breaks: Vec<f64> = (0..=16).map(|i| i as f64 / 16.0).collect();
        2.0 * std::f64::consts::PI * gl.composite(&breaks, |r| Complex64::new(r * standard(r * r), 0.0)).re
    })
}

/// A polynomial-modulated standard bump, scaled to unit `C^2` norm.
#[derive(Debug, Clone)]
pub struct Bump {
    pub label: String,
    dim: usize,
    /// Constant, linear and upper-triangular quadratic coefficients.
    coef: Vec<f64>,
    scale: f64,
}

impl Bump {
    fn raw(label: String, dim: usize, coef: Vec<f64>) -> Self {
        Self {
            label,
            dim,
            coef,
            scale: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        let r2: f64 = p.iter().map(|v| v * v).sum();
        if r2 >= 1.0 {
            return 0.0;
        }
        let d = self.dim;
        let mut poly = self.coef[0];
        let mut k = 1 + d;
        for i in 0..d {
            poly += self.coef[1 + i] * p[i];
            for j in i..d {
                poly += self.coef[k] * p[i] * p[j];
                k += 1;
            }
        }
        standard(r2) * poly / self.scale
    }

    /// Sup of all partial derivatives up to order two, by finite differences.
    fn c2_norm(&self) -> f64 {
        let d = self.dim;
        let per_axis: usize = match d {
            1 => 2001,
            2 => 201,
            _ => 61,
        };
        let g = 2.0 / (per_axis - 1) as f64;
        let mut orders: Vec<Vec<u32>> = vec![vec![0; d]];
        for i in 0..d {
            let mut o = vec![0; d];
            o[i] = 1;
            orders.push(o.clone());
            o[i] = 2;
            orders.push(o);
            for j in i + 1..d {
                let mut o = vec![0; d];
                o[i] = 1;
                o[j] = 1;
                orders.push(o);
            }
        }
        let f = |q: &[f64]| Ok(Complex64::new(self.eval(q), 0.0));
        let mut best: f64 = 0.0;
        let total = per_axis.pow(d as u32);
        let mut p = vec![0.0; d];
        for flat in 0..total {
            let mut rest = flat;
            for pa in p.iter_mut() {
                *pa = -1.0 + g * (rest % per_axis) as f64;
                rest /= per_axis;
            }
            if p.iter().map(|v| v * v).sum::<f64>() >= 1.0 {
                continue;
            }
            for o in &orders {
                let v = partial(f, &p, o, g).expect("bump evaluation is infallible").norm();
                best = best.max(v);
            }
        }
        best
    }
}

fn build(dim: usize) -> Vec<Bump> {
    let ncoef = 1 + dim + dim * (dim + 1) / 2;
    let mut out = Vec::new();
    let mut c = vec![0.0; ncoef];
    c[0] = 1.0;
    out.push(Bump::raw("standard".into(), dim, c));
    for i in 0..dim {
        let mut c = vec![0.0; ncoef];
        c[1 + i] = 1.0;
        out.push(Bump::raw(format!("moment-{i}"), dim, c));
    }
    for seed in [11u64, 12] {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let c: Vec<f64> = (0..ncoef).map(|_| StandardNormal.sample(&mut rng)).collect();
        out.push(Bump::raw(format!("random-{seed}"), dim, c));
    }
    for b in &mut out {
        b.scale = b.c2_norm();
    }
    out
}

/// The normalized bump family on `R^dim`, `dim` in 1..=3.
pub fn bump_family(dim: usize) -> &'static [Bump] {
    static FAMILIES: [OnceLock<Vec<Bump>>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    assert!((1..=3).contains(&dim), "bump dimension must be 1, 2 or 3");
    FAMILIES[dim - 1].get_or_init(|| build(dim))
}
