//! Analysis and synthesis operators.
//!
//! `T_N` samples every channel `psi_{j,k} * f` at the lower-left anchors of
//! its rectangles, holds each sample constant over the rectangle, and filters
//! again. The cell integral of the synthesis filter is therefore the exact
//! sum of its grid samples over the cell. `R = I - T_N`, and the Neumann
//! series `sum_{i>=0} R^i` inverts `T_N` when `R` is contractive.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FlagError, Result};
use crate::fft::LatticeFft;
use crate::filters::FilterBank;
use crate::grid::{
    l2_norm_slice, read_block, same_grid, write_block, DyadicRectangle, Grid, RectShape, SampledFunction,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Coefficients of one `(j, k)` channel over its anchor lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Slot {
    pub j: u32,
    pub k: u32,
    pub shape: RectShape,
    pub values: Vec<Complex64>,
}

/// Coefficients over every dyadic rectangle plus a full-grid low-pass channel.
///
/// Also serves as the carrier for arbitrary rectangle-indexed sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    grid: Grid,
    offset: u32,
    j_range: (u32, u32),
    k_range: (u32, u32),
    slots: Vec<Slot>,
    low_pass: Vec<Complex64>,
}

impl CoefficientField {
    pub fn zeros(grid: Grid, offset: u32, j_range: (u32, u32), k_range: (u32, u32)) -> Result<Self> {
        if offset == 0 {
            return Err(FlagError::Config("sampling offset N must be at least 1".into()));
        }
        if j_range.0 > j_range.1 || k_range.0 > k_range.1 {
            return Err(FlagError::Range("empty scale range".into()));
        }
        let mut slots = Vec::new();
        for j in j_range.0..=j_range.1 {
            for k in k_range.0..=k_range.1 {
                let shape = RectShape::new(grid, j, k, offset)?;
                slots.push(Slot {
                    j,
                    k,
                    shape,
                    values: vec![ZERO; shape.len()],
                });
            }
        }
        Ok(Self {
            grid,
            offset,
            j_range,
            k_range,
            slots,
            low_pass: vec![ZERO; grid.len()],
        })
    }

    /// Zero field over the scale window of `bank`.
    pub fn for_bank(bank: &FilterBank, offset: u32) -> Result<Self> {
        Self::zeros(bank.grid(), offset, bank.j_range(), bank.k_range())
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn offset(&self) -> u32 {
        self.offset
    }

    pub fn j_range(&self) -> (u32, u32) {
        self.j_range
    }

    pub fn k_range(&self) -> (u32, u32) {
        self.k_range
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn low_pass(&self) -> &[Complex64] {
        &self.low_pass
    }

    fn slot_index(&self, j: u32, k: u32) -> Option<usize> {
        if j < self.j_range.0 || j > self.j_range.1 || k < self.k_range.0 || k > self.k_range.1 {
            return None;
        }
        let kw = (self.k_range.1 - self.k_range.0 + 1) as usize;
        Some((j - self.j_range.0) as usize * kw + (k - self.k_range.0) as usize)
    }

    pub fn slot(&self, j: u32, k: u32) -> Option<&Slot> {
        self.slot_index(j, k).map(|i| &self.slots[i])
    }

    pub fn slot_values_mut(&mut self, j: u32, k: u32) -> Option<&mut [Complex64]> {
        let i = self.slot_index(j, k)?;
        Some(&mut self.slots[i].values)
    }

    pub fn low_pass_mut(&mut self) -> &mut [Complex64] {
        &mut self.low_pass
    }

    /// Coefficient of rectangle `r`, if it belongs to this field.
    pub fn get(&self, r: &DyadicRectangle) -> Option<Complex64> {
        let (i, idx) = self.locate(r)?;
        Some(self.slots[i].values[idx])
    }

    pub fn set(&mut self, r: &DyadicRectangle, v: Complex64) -> Result<()> {
        let (i, idx) = self
            .locate(r)
            .ok_or_else(|| FlagError::Shape(format!("rectangle {r:?} not in this field")))?;
        self.slots[i].values[idx] = v;
        Ok(())
    }

    fn locate(&self, r: &DyadicRectangle) -> Option<(usize, usize)> {
        if r.offset != self.offset || r.i_idx.len() != self.grid.n() || r.j_idx.len() != self.grid.m() {
            return None;
        }
        let i = self.slot_index(r.j, r.k)?;
        let shape = self.slots[i].shape;
        let ok = r.i_idx.iter().all(|&v| (v as usize) < shape.axis_len(0))
            && r.j_idx.iter().all(|&v| (v as usize) < shape.axis_len(shape.n));
        ok.then(|| (i, shape.index_of(r)))
    }

    pub fn rectangle(&self, slot: &Slot, index: usize) -> DyadicRectangle {
        slot.shape.rectangle(slot.j, slot.k, self.offset, index)
    }

    /// Number of rectangle entries, excluding the low-pass channel.
    pub fn entry_count(&self) -> usize {
        self.slots.iter().map(|s| s.values.len()).sum()
    }

    /// Applies `f(j, k, index, value)` to every rectangle entry.
    pub fn map_entries(&self, f: impl Fn(u32, u32, usize, Complex64) -> Complex64) -> Self {
        let mut out = self.clone();
        for s in &mut out.slots {
            for (i, v) in s.values.iter_mut().enumerate() {
                *v = f(s.j, s.k, i, *v);
            }
        }
        out
    }

    pub fn without_low_pass(&self) -> Self {
        let mut out = self.clone();
        out.low_pass.iter_mut().for_each(|v| *v = ZERO);
        out
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.map_entries(|_, _, _, v| v * c);
        out.low_pass.iter_mut().for_each(|v| *v *= c);
        out
    }

    pub fn same_shape(&self, other: &Self) -> Result<()> {
        same_grid(self.grid, other.grid)?;
        if self.offset != other.offset || self.j_range != other.j_range || self.k_range != other.k_range {
            return Err(FlagError::Shape(format!(
                "coefficient fields differ: N {} vs {}, j {:?} vs {:?}, k {:?} vs {:?}",
                self.offset, other.offset, self.j_range, other.j_range, self.k_range, other.k_range
            )));
        }
        Ok(())
    }

    pub fn check_finite(&self) -> Result<()> {
        let mut pos = 0;
        for s in &self.slots {
            if let Some(i) = s.values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(FlagError::NonFinite { index: pos + i });
            }
            pos += s.values.len();
        }
        Ok(())
    }

    /// Writes `coeffs.json` and `coeffs.flgf` (low-pass block first, then one
    /// block per slot in manifest order).
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let g = self.grid;
        let mut file = std::io::BufWriter::new(std::fs::File::create(dir.join("coeffs.flgf"))?);
        let (n, m, l) = (g.n() as u8, g.m() as u8, g.level() as u8);
        write_block(&mut file, n, m, l, &self.low_pass)?;
        for s in &self.slots {
            write_block(&mut file, n, m, l, &s.values)?;
        }
        file.flush()?;
        let manifest = CoefficientManifest {
            n: g.n(),
            m: g.m(),
            level: g.level(),
            offset: self.offset,
            j_range: self.j_range,
            k_range: self.k_range,
            slots: self.slots.iter().map(|s| (s.j, s.k)).collect(),
        };
        std::fs::write(dir.join("coeffs.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let manifest: CoefficientManifest = serde_json::from_slice(&std::fs::read(dir.join("coeffs.json"))?)?;
        let grid = Grid::new(manifest.n, manifest.m, manifest.level)?;
        let mut field = Self::zeros(grid, manifest.offset, manifest.j_range, manifest.k_range)?;
        let bytes = std::fs::read(dir.join("coeffs.flgf"))?;
        let mut r = &bytes[..];
        let lp = read_block(&mut r)?;
        if lp.values.len() != grid.len() {
            return Err(FlagError::Format("low-pass block has the wrong length".into()));
        }
        field.low_pass = lp.values;
        for s in &mut field.slots {
            let b = read_block(&mut r)?;
            if b.values.len() != s.values.len() {
                return Err(FlagError::Format(format!(
                    "slot ({}, {}) has the wrong length",
                    s.j, s.k
                )));
            }
            s.values = b.values;
        }
        field.check_finite()?;
        Ok(field)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CoefficientManifest {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "L")]
    pub level: u32,
    #[serde(rename = "N")]
    pub offset: u32,
    pub j_range: (u32, u32),
    pub k_range: (u32, u32),
    pub slots: Vec<(u32, u32)>,
}

/// Holds anchor values constant over their rectangles.
#[cfg(test)]
pub(crate) fn hold(shape: &RectShape, grid: Grid, anchors: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![ZERO; grid.len()];
    shape.for_each_cell(grid, |g, a| out[g] = anchors[a]);
    out
}

#[cfg(test)]
pub(crate) fn sample_at_anchors(shape: &RectShape, grid: Grid, full: &[Complex64]) -> Vec<Complex64> {
    shape.anchor_grid_indices(grid).iter().map(|&i| full[i]).collect()
}

fn check_setup(f_grid: Grid, bank: &FilterBank, offset: u32) -> Result<()> {
    same_grid(f_grid, bank.grid())?;
    if offset == 0 {
        return Err(FlagError::Config("sampling offset N must be at least 1".into()));
    }
    RectShape::new(bank.grid(), bank.j_range().1, bank.k_range().1, offset)?;
    Ok(())
}

fn spectrum(f: &SampledFunction, fft: &LatticeFft) -> Vec<Complex64> {
    fft.forward_vec(f.values())
}

fn multiply(a: &[f64], spec: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(spec).map(|(&x, &s)| s * x).collect()
}

pub type Channel = ((u32, u32), Vec<Complex64>);

/// Full-grid convolutions `psi_{j,k} * f` for every scale, in bank order.
pub fn channel_convolutions(f: &SampledFunction, bank: &FilterBank) -> Result<Vec<Channel>> {
    same_grid(f.grid(), bank.grid())?;
    let fft = LatticeFft::for_grid(bank.grid());
    let spec = spectrum(f, &fft);
    bank.scales()
        .into_par_iter()
        .map(|(j, k)| {
            let mut v = multiply(&bank.lift(j, k)?, &spec);
            fft.inverse(&mut v);
            Ok(((j, k), v))
        })
        .collect()
}

/// Calls `visit((j, k), psi_{j,k} * f)` for every scale in bank order.
///
/// Channels are computed in parallel batches but visited sequentially, so
/// accumulations in `visit` are reproducible for any worker count.
pub fn visit_channels(
    f: &SampledFunction,
    bank: &FilterBank,
    mut visit: impl FnMut((u32, u32), &[Complex64]) -> Result<()>,
) -> Result<()> {
    same_grid(f.grid(), bank.grid())?;
    let fft = LatticeFft::for_grid(bank.grid());
    let spec = spectrum(f, &fft);
    let scales = bank.scales();
    let batch = rayon::current_num_threads().max(1);
    for chunk in scales.chunks(batch) {
        let convs: Vec<Vec<Complex64>> = chunk
            .par_iter()
            .map(|&(j, k)| {
                let mut v = multiply(&bank.lift(j, k)?, &spec);
                fft.inverse(&mut v);
                Ok(v)
            })
            .collect::<Result<_>>()?;
        for (&s, v) in chunk.iter().zip(&convs) {
            visit(s, v)?;
        }
    }
    Ok(())
}

/// The low-pass channel `lowpass * f` at full resolution.
pub fn low_pass_channel(f: &SampledFunction, bank: &FilterBank) -> Result<Vec<Complex64>> {
    same_grid(f.grid(), bank.grid())?;
    let fft = LatticeFft::for_grid(bank.grid());
    let mut v = multiply(bank.low_pass(), &spectrum(f, &fft));
    fft.inverse(&mut v);
    Ok(v)
}

/// Samples every channel at the anchors of its rectangles.
pub fn analyze(f: &SampledFunction, bank: &FilterBank, offset: u32) -> Result<CoefficientField> {
    check_setup(f.grid(), bank, offset)?;
    let grid = bank.grid();
    let mut field = CoefficientField::for_bank(bank, offset)?;
    let fft = LatticeFft::for_grid(grid);
    let spec = spectrum(f, &fft);
    let scale = 1.0 / grid.len() as f64;
    let values: Vec<Vec<Complex64>> = field
        .slots
        .par_iter()
        .map(|s| {
            let (psi1, psi2) = (bank.psi1(s.j)?, bank.psi2(s.k)?);
            let mut folded = vec![ZERO; s.shape.len()];
            let mlen = psi2.len();
            fold_visit(grid, &s.shape, |gi, si, _| {
                let a = psi1[gi];
                if a != 0.0 {
                    folded[si] += spec[gi] * (a * psi2[gi & (mlen - 1)]);
                }
            });
            // Anchor samples are the small inverse transform of the folded spectrum.
            let small = LatticeFft::with_dims(&s.shape.dims());
            let mut v = small.inverse_vec(&folded);
            let a = s.shape.len() as f64;
            v.iter_mut().for_each(|x| *x *= a * scale);
            Ok(v)
        })
        .collect::<Result<_>>()?;
    for (s, v) in field.slots.iter_mut().zip(values) {
        s.values = v;
    }
    let mut lp = multiply(bank.low_pass(), &spec);
    fft.inverse(&mut lp);
    field.low_pass = lp;
    Ok(field)
}

/// Visits every lattice frequency with its folded index on the anchor lattice
/// of `shape` and the transfer function of the rectangle indicator,
/// `prod_a sum_{t < w_a} e^{-2 pi i xi_a t / side}`.
fn fold_visit(grid: Grid, shape: &RectShape, mut f: impl FnMut(usize, usize, Complex64)) {
    let d = grid.dim();
    let side = grid.side();
    let tables: Vec<(Vec<usize>, Vec<Complex64>)> = (0..d)
        .map(|a| {
            let n = shape.axis_len(a);
            let w = side / n;
            let stride = shape.stride(a);
            let idx = (0..side).map(|c| (c % n) * stride).collect();
            let unit =
                |k: usize| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (k % side) as f64 / side as f64);
            let boxes = (0..side)
                .map(|c| {
                    if c == 0 {
                        Complex64::new(w as f64, 0.0)
                    } else {
                        (Complex64::new(1.0, 0.0) - unit(c * w)) / (Complex64::new(1.0, 0.0) - unit(c))
                    }
                })
                .collect();
            (idx, boxes)
        })
        .collect();
    let last = d - 1;
    let (lidx, lbox) = &tables[last];
    let mut coords = vec![0usize; d];
    let mut gi = 0usize;
    loop {
        let mut si = 0usize;
        let mut b = Complex64::new(1.0, 0.0);
        for a in 0..last {
            si += tables[a].0[coords[a]];
            b *= tables[a].1[coords[a]];
        }
        for c in 0..side {
            f(gi + c, si + lidx[c], b * lbox[c]);
        }
        gi += side;
        let mut a = last;
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            coords[a] += 1;
            if coords[a] < side {
                break;
            }
            coords[a] = 0;
        }
    }
}

/// `sum_{j,k} psi_{j,k} * psi_{j,k} * f` plus the low-pass channel applied twice.
pub fn synthesize_continuous(f: &SampledFunction, bank: &FilterBank) -> Result<SampledFunction> {
    same_grid(f.grid(), bank.grid())?;
    let fft = LatticeFft::for_grid(bank.grid());
    let spec = spectrum(f, &fft);
    let mut total: Vec<f64> = bank.low_pass().iter().map(|v| v * v).collect();
    for (j, k) in bank.scales() {
        for (t, v) in total.iter_mut().zip(bank.lift(j, k)?) {
            *t += v * v;
        }
    }
    let mut out = multiply(&total, &spec);
    fft.inverse(&mut out);
    Ok(SampledFunction::from_vec_unchecked(f.grid(), out))
}

#[derive(Clone, Copy, PartialEq)]
enum Direction {
    Forward,
    Adjoint,
}

/// One channel of `T_N` (or its adjoint) on the frequency side.
///
/// Sampling at anchors folds the spectrum onto the anchor lattice; holding
/// multiplies the folded spectrum by the rectangle transfer function.
fn channel_spectrum(
    grid: Grid,
    shape: &RectShape,
    psi1: &[f64],
    psi2: &[f64],
    spec: &[Complex64],
    dir: Direction,
) -> Vec<Complex64> {
    let mlen = psi2.len();
    let scale = shape.len() as f64 / grid.len() as f64;
    let mut folded = vec![ZERO; shape.len()];
    fold_visit(grid, shape, |gi, si, b| {
        let a = psi1[gi];
        if a != 0.0 {
            let c = spec[gi] * (a * psi2[gi & (mlen - 1)]);
            folded[si] += match dir {
                Direction::Forward => c,
                Direction::Adjoint => c * b.conj(),
            };
        }
    });
    folded.iter_mut().for_each(|v| *v *= scale);
    let mut out = vec![ZERO; grid.len()];
    fold_visit(grid, shape, |gi, si, b| {
        let a = psi1[gi];
        if a != 0.0 {
            let l = a * psi2[gi & (mlen - 1)];
            out[gi] = match dir {
                Direction::Forward => folded[si] * b * l,
                Direction::Adjoint => folded[si] * l,
            };
        }
    });
    out
}

fn discretized(f: &SampledFunction, bank: &FilterBank, offset: u32, dir: Direction) -> Result<SampledFunction> {
    check_setup(f.grid(), bank, offset)?;
    let grid = bank.grid();
    let fft = LatticeFft::for_grid(grid);
    let spec = spectrum(f, &fft);
    let contributions: Vec<Vec<Complex64>> = bank
        .scales()
        .into_par_iter()
        .map(|(j, k)| {
            let shape = RectShape::new(grid, j, k, offset)?;
            Ok(channel_spectrum(grid, &shape, bank.psi1(j)?, bank.psi2(k)?, &spec, dir))
        })
        .collect::<Result<_>>()?;
    let mut total: Vec<Complex64> = bank.low_pass().iter().zip(&spec).map(|(&l, &s)| s * (l * l)).collect();
    for c in contributions {
        for (t, v) in total.iter_mut().zip(c) {
            *t += v;
        }
    }
    fft.inverse(&mut total);
    Ok(SampledFunction::from_vec_unchecked(grid, total))
}

/// The discretized reproducing operator `T_N`.
pub fn apply_tn(f: &SampledFunction, bank: &FilterBank, offset: u32) -> Result<SampledFunction> {
    discretized(f, bank, offset, Direction::Forward)
}

/// Adjoint of `T_N` for the grid inner product.
pub fn apply_tn_adjoint(f: &SampledFunction, bank: &FilterBank, offset: u32) -> Result<SampledFunction> {
    discretized(f, bank, offset, Direction::Adjoint)
}

/// `R(f) = f - T_N(f)`.
pub fn remainder_apply(f: &SampledFunction, bank: &FilterBank, offset: u32) -> Result<SampledFunction> {
    f.sub(&apply_tn(f, bank, offset)?)
}

pub fn remainder_adjoint(f: &SampledFunction, bank: &FilterBank, offset: u32) -> Result<SampledFunction> {
    f.sub(&apply_tn_adjoint(f, bank, offset)?)
}

pub(crate) fn random_field(grid: Grid, seed: u64) -> SampledFunction {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let values = (0..grid.len())
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    SampledFunction::from_vec_unchecked(grid, values)
}

/// Power-iteration estimate of the L2 operator norm of `R`.
pub fn remainder_norm_estimate(bank: &FilterBank, offset: u32, steps: usize, seed: u64) -> Result<f64> {
    let mut v = random_field(bank.grid(), seed);
    v = v.scale(Complex64::new(1.0 / v.l2_norm(), 0.0));
    let mut estimate = 0.0;
    for _ in 0..steps.max(1) {
        let w = remainder_apply(&v, bank, offset)?;
        estimate = w.l2_norm();
        let u = remainder_adjoint(&w, bank, offset)?;
        let nu = u.l2_norm();
        if nu == 0.0 {
            return Ok(0.0);
        }
        v = u.scale(Complex64::new(1.0 / nu, 0.0));
    }
    Ok(estimate)
}

/// Controls for [`neumann_inverse_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeumannOptions {
    pub tol: f64,
    pub max_iterations: usize,
    pub probe_steps: usize,
    pub probe_seed: u64,
}

impl Default for NeumannOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iterations: 200,
            probe_steps: 3,
            probe_seed: 0x5eed,
        }
    }
}

/// Output of the Neumann iteration.
#[derive(Debug, Clone)]
pub struct NeumannSolution {
    pub function: SampledFunction,
    pub iterations: usize,
    pub contraction_probe: f64,
    pub last_increment: f64,
}

/// `T_N^{-1} f` by iterating `g <- f + R(g)` until the increment drops below `tol * |f|`.
pub fn neumann_inverse(f: &SampledFunction, bank: &FilterBank, offset: u32, tol: f64) -> Result<NeumannSolution> {
    neumann_inverse_with(
        f,
        bank,
        offset,
        &NeumannOptions {
            tol,
            ..NeumannOptions::default()
        },
    )
}

pub fn neumann_inverse_with(
    f: &SampledFunction,
    bank: &FilterBank,
    offset: u32,
    opts: &NeumannOptions,
) -> Result<NeumannSolution> {
    check_setup(f.grid(), bank, offset)?;
    if !(opts.tol > 0.0) {
        return Err(FlagError::Domain(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let fnorm = f.l2_norm();
    if fnorm == 0.0 {
        return Ok(NeumannSolution {
            function: SampledFunction::zeros(f.grid()),
            iterations: 1,
            contraction_probe: 0.0,
            last_increment: 0.0,
        });
    }
    let probe = remainder_norm_estimate(bank, offset, opts.probe_steps, opts.probe_seed)?;
    if probe >= 1.0 {
        return Err(FlagError::Divergence { contraction: probe });
    }
    let mut g = f.clone();
    let mut increment = f64::INFINITY;
    let mut growing = 0;
    for it in 1..=opts.max_iterations {
        let next = f.add(&remainder_apply(&g, bank, offset)?)?;
        let previous = increment;
        increment = l2_norm_slice(next.sub(&g)?.values(), f.grid().cell_volume()) / fnorm;
        g = next;
        growing = if increment >= previous { growing + 1 } else { 0 };
        if growing >= 3 {
            return Err(FlagError::Divergence {
                contraction: increment / previous,
            });
        }
        if increment <= opts.tol {
            return Ok(NeumannSolution {
                function: g,
                iterations: it,
                contraction_probe: probe,
                last_increment: increment,
            });
        }
    }
    Err(FlagError::Convergence {
        iterations: opts.max_iterations,
        increment,
    })
}

/// `sum |I||J| (cell-averaged psi_{j,k})(x - x_I, y - y_J) c_R` plus the low-pass channel.
pub fn synthesize_discrete(coeffs: &CoefficientField, bank: &FilterBank) -> Result<SampledFunction> {
    same_grid(coeffs.grid(), bank.grid())?;
    let (bj, bk) = (bank.j_range(), bank.k_range());
    if coeffs.j_range.0 < bj.0 || coeffs.j_range.1 > bj.1 || coeffs.k_range.0 < bk.0 || coeffs.k_range.1 > bk.1 {
        return Err(FlagError::Shape(format!(
            "coefficient scales j {:?}, k {:?} exceed the bank window j {:?}, k {:?}",
            coeffs.j_range, coeffs.k_range, bj, bk
        )));
    }
    let grid = bank.grid();
    let fft = LatticeFft::for_grid(grid);
    let contributions: Vec<Option<Vec<Complex64>>> = coeffs
        .slots
        .par_iter()
        .map(|s| {
            if s.values.iter().all(|v| *v == ZERO) {
                return Ok(None);
            }
            let (psi1, psi2) = (bank.psi1(s.j)?, bank.psi2(s.k)?);
            let mlen = psi2.len();
            let small = LatticeFft::with_dims(&s.shape.dims());
            let v = small.forward_vec(&s.values);
            let mut out = vec![ZERO; grid.len()];
            fold_visit(grid, &s.shape, |gi, si, b| {
                let a = psi1[gi];
                if a != 0.0 {
                    out[gi] = v[si] * b * (a * psi2[gi & (mlen - 1)]);
                }
            });
            Ok(Some(out))
        })
        .collect::<Result<_>>()?;
    let mut total = multiply(bank.low_pass(), &fft.forward_vec(&coeffs.low_pass));
    for c in contributions.into_iter().flatten() {
        for (t, v) in total.iter_mut().zip(c) {
            *t += v;
        }
    }
    fft.inverse(&mut total);
    Ok(SampledFunction::from_vec_unchecked(grid, total))
}
