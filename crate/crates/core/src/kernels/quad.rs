//! Gauss-Legendre panels and adaptive Gauss-Kronrod quadrature.

use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{FlagError, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        if n == 1 {
            return Self {
                nodes: vec![0.0],
                weights: vec![2.0],
            };
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            weights[i] = w;
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> Complex64) -> Complex64 {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| f(c + h * x) * w)
            .sum::<Complex64>()
            * h
    }

    /// Sum over consecutive panels.
    pub fn composite(&self, breaks: &[f64], mut f: impl FnMut(f64) -> Complex64) -> Complex64 {
        breaks.windows(2).map(|w| self.integrate(w[0], w[1], &mut f)).sum()
    }
}

/// Breakpoints on `[0, upper]` graded geometrically toward 0 around `scale`.
pub fn graded_breaks(scale: f64, upper: f64, below: i32) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut t = scale * 2f64.powi(-below);
    while t < upper {
        out.push(t);
        t *= 2.0;
    }
    out.push(upper);
    out
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(a: f64, b: f64, f: &mut impl FnMut(f64) -> Result<Complex64>) -> Result<(Complex64, f64)> {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let fc = f(c)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let (f1, f2) = (f(c - h * XGK[i])?, f(c + h * XGK[i])?);
        kronrod += (f1 + f2) * WGK[i];
        if i % 2 == 1 {
            gauss += (f1 + f2) * WG[i / 2];
        }
    }
    Ok((kronrod * h, ((kronrod - gauss) * h).norm()))
}

struct Panel {
    err: f64,
    a: f64,
    b: f64,
    value: Complex64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Globally adaptive 15-point Gauss-Kronrod over the panels `breaks`.
pub fn adaptive(
    breaks: &[f64],
    rtol: f64,
    max_panels: usize,
    mut f: impl FnMut(f64) -> Result<Complex64>,
) -> Result<Complex64> {
    let mut heap = BinaryHeap::new();
    let (mut total, mut err, mut mass) = (ZERO, 0.0, 0.0);
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (value, e) = gk15(w[0], w[1], &mut f)?;
            total += value;
            err += e;
            mass += value.norm();
            heap.push(Panel {
                err: e,
                a: w[0],
                b: w[1],
                value,
            });
        }
    }
    let tol = |total: Complex64, mass: f64| (rtol * total.norm()).max(1e-3 * rtol * mass).max(1e-300);
    while err > tol(total, mass) {
        if heap.len() >= max_panels {
            return Err(FlagError::Integration(format!(
                "no convergence after {} panels: estimate {total}, error {err:.3e}",
                heap.len()
            )));
        }
        let p = heap.pop().expect("heap holds every panel");
        let m = 0.5 * (p.a + p.b);
        let (l, el) = gk15(p.a, m, &mut f)?;
        let (r, er) = gk15(m, p.b, &mut f)?;
        total += l + r - p.value;
        err += el + er - p.err;
        mass += l.norm() + r.norm() - p.value.norm();
        heap.push(Panel {
            err: el,
            a: p.a,
            b: m,
            value: l,
        });
        heap.push(Panel {
            err: er,
            a: m,
            b: p.b,
            value: r,
        });
    }
    Ok(total)
}
