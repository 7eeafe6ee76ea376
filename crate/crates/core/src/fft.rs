//! Separable multi-dimensional FFT over a periodic lattice, row-major with
//! axis 0 slowest.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

struct AxisPlan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

pub(crate) struct LatticeFft {
    dims: Vec<usize>,
    plans: Vec<AxisPlan>,
    len: usize,
}

impl LatticeFft {
    pub fn new(side: usize, dim: usize) -> Self {
        Self::with_dims(&vec![side; dim])
    }

    pub fn with_dims(dims: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let plans = dims
            .iter()
            .map(|&n| AxisPlan {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
            .collect();
        Self {
            dims: dims.to_vec(),
            plans,
            len: dims.iter().product(),
        }
    }

    pub fn for_grid(grid: crate::grid::Grid) -> Self {
        Self::new(grid.side(), grid.dim())
    }

    /// Unnormalized forward transform, in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(true, data);
    }

    /// Inverse transform scaled by `1 / len`, in place.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(false, data);
        let s = 1.0 / self.len as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn forward_vec(&self, data: &[Complex64]) -> Vec<Complex64> {
        let mut v = data.to_vec();
        self.forward(&mut v);
        v
    }

    pub fn inverse_vec(&self, data: &[Complex64]) -> Vec<Complex64> {
        let mut v = data.to_vec();
        self.inverse(&mut v);
        v
    }

    fn run(&self, forward: bool, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len);
        let d = self.dims.len();
        for axis in (0..d).rev() {
            let n = self.dims[axis];
            if n == 1 {
                continue;
            }
            let plan = if forward {
                &self.plans[axis].forward
            } else {
                &self.plans[axis].inverse
            };
            let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
            let stride: usize = self.dims[axis + 1..].iter().product();
            if stride == 1 {
                plan.process_with_scratch(data, &mut scratch);
                continue;
            }
            // Gather a block of columns into contiguous rows, transform, scatter back.
            let block = n * stride;
            let mut buf = vec![Complex64::new(0.0, 0.0); block];
            for chunk in data.chunks_exact_mut(block) {
                for c in 0..n {
                    for o in 0..stride {
                        buf[o * n + c] = chunk[c * stride + o];
                    }
                }
                plan.process_with_scratch(&mut buf, &mut scratch);
                for c in 0..n {
                    for o in 0..stride {
                        chunk[c * stride + o] = buf[o * n + c];
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(data: &[Complex64], dims: &[usize]) -> Vec<Complex64> {
        let len: usize = dims.iter().product();
        let coords = |mut i: usize| {
            let mut c = vec![0; dims.len()];
            for a in (0..dims.len()).rev() {
                c[a] = i % dims[a];
                i /= dims[a];
            }
            c
        };
        (0..len)
            .map(|k| {
                let kc = coords(k);
                (0..len)
                    .map(|x| {
                        let xc = coords(x);
                        let ph: f64 = (0..dims.len()).map(|a| (kc[a] * xc[a]) as f64 / dims[a] as f64).sum();
                        data[x] * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * ph)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_direct_dft() {
        for dims in [vec![4, 4], vec![8, 2], vec![2, 4, 8], vec![1, 4]] {
            let len: usize = dims.iter().product();
            let fft = LatticeFft::with_dims(&dims);
            let data: Vec<Complex64> = (0..len).map(|i| Complex64::new(i as f64, (i * i % 5) as f64)).collect();
            let got = fft.forward_vec(&data);
            for (a, b) in got.iter().zip(direct(&data, &dims)) {
                assert!((a - b).norm() < 1e-9);
            }
            let back = fft.inverse_vec(&got);
            for (a, b) in back.iter().zip(&data) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn roundtrip_3d() {
        let fft = LatticeFft::new(8, 3);
        let data: Vec<Complex64> = (0..512)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64).cos()))
            .collect();
        let back = fft.inverse_vec(&fft.forward_vec(&data));
        for (a, b) in back.iter().zip(&data) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
