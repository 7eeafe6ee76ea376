//! Periodic sampling grids on the unit torus, dyadic rectangles and quasi-norms.
//!
//! Lattice points are stored row-major with axis 0 slowest. The first `n` axes
//! form the first factor and the last `m` axes the second factor, so the
//! second-factor part of a linear index is `index % side^m`.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FlagError, Result};

/// Largest dimension allowed for either factor.
pub const MAX_FACTOR_DIM: usize = 3;
/// Smallest resolution exponent.
pub const MIN_LEVEL: u32 = 3;
/// Default ceiling on the resolution exponent.
pub const MAX_LEVEL: u32 = 14;
/// Hard cap on the total number of samples, as a power of two.
const MAX_SAMPLES_LOG2: u32 = 30;

/// A uniform periodic grid with `2^level` samples per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    m: usize,
    level: u32,
}

impl Grid {
    pub fn new(n: usize, m: usize, level: u32) -> Result<Self> {
        if !(1..=MAX_FACTOR_DIM).contains(&n) || !(1..=MAX_FACTOR_DIM).contains(&m) {
            return Err(FlagError::Config(format!(
                "factor dimensions must lie in 1..={MAX_FACTOR_DIM}, got n={n}, m={m}"
            )));
        }
        if !(MIN_LEVEL..=MAX_LEVEL).contains(&level) {
            return Err(FlagError::Config(format!(
                "resolution exponent must lie in {MIN_LEVEL}..={MAX_LEVEL}, got {level}"
            )));
        }
        if level as usize * (n + m) > MAX_SAMPLES_LOG2 as usize {
            return Err(FlagError::Config(format!(
                "grid with 2^{} samples exceeds the addressable budget 2^{MAX_SAMPLES_LOG2}",
                level as usize * (n + m)
            )));
        }
        Ok(Self { n, m, level })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.n + self.m
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Samples per axis.
    pub fn side(&self) -> usize {
        1 << self.level
    }

    /// Torus length per sample; a power of two, so `spacing * side == 1` exactly.
    pub fn spacing(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    /// Measure of one sample cell.
    pub fn cell_volume(&self) -> f64 {
        (-((self.level as usize * self.dim()) as f64)).exp2()
    }

    pub fn len(&self) -> usize {
        1 << (self.level as usize * self.dim())
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of lattice points of the second factor alone.
    pub fn factor2_len(&self) -> usize {
        1 << (self.level as usize * self.m)
    }

    pub fn stride(&self, axis: usize) -> usize {
        1 << (self.level as usize * (self.dim() - 1 - axis))
    }

    pub fn coords(&self, mut index: usize) -> Vec<usize> {
        let side = self.side();
        let mut out = vec![0; self.dim()];
        for c in out.iter_mut().rev() {
            *c = index % side;
            index /= side;
        }
        out
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        let side = self.side();
        coords.iter().fold(0, |acc, &c| acc * side + c % side)
    }

    /// Signed frequency of lattice coordinate `c` along one axis.
    pub fn frequency(&self, c: usize) -> i64 {
        let side = self.side() as i64;
        let c = c as i64;
        if c < side / 2 {
            c
        } else {
            c - side
        }
    }

    /// Signed minimal-image displacement of lattice coordinate `c`, in samples.
    pub fn displacement(&self, c: usize) -> i64 {
        self.frequency(c)
    }
}

/// Shorthand for [`Grid::new`].
pub fn make_grid(n: usize, m: usize, level: u32) -> Result<Grid> {
    Grid::new(n, m, level)
}

/// Complex samples of a function on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Grid,
    values: Vec<Complex64>,
}

impl SampledFunction {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(FlagError::Shape(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(FlagError::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    pub fn from_real(grid: Grid, values: &[f64]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn constant(grid: Grid, c: Complex64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f` at the lattice points, given as coordinates in `[0, 1)`.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> Complex64) -> Result<Self> {
        let h = grid.spacing();
        let values = (0..grid.len())
            .map(|i| {
                let x: Vec<f64> = grid.coords(i).iter().map(|&c| c as f64 * h).collect();
                f(&x)
            })
            .collect();
        Self::new(grid, values)
    }

    pub(crate) fn from_vec_unchecked(grid: Grid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_vec_unchecked(self.grid, self.values.iter().map(|v| v * c).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    fn zip(&self, other: &Self, op: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        same_grid(self.grid, other.grid)?;
        Ok(Self::from_vec_unchecked(
            self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| op(a, b)).collect(),
        ))
    }

    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// Cyclic shift by `shift[a]` samples along each axis: `out(x) = f(x - shift)`.
    pub fn translate(&self, shift: &[i64]) -> Result<Self> {
        let g = self.grid;
        if shift.len() != g.dim() {
            return Err(FlagError::Shape(format!(
                "shift has {} components, grid has {} axes",
                shift.len(),
                g.dim()
            )));
        }
        let side = g.side() as i64;
        let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
        for (i, &v) in self.values.iter().enumerate() {
            let c: Vec<usize> = g
                .coords(i)
                .iter()
                .zip(shift)
                .map(|(&c, &s)| (c as i64 + s).rem_euclid(side) as usize)
                .collect();
            out[g.index(&c)] = v;
        }
        Ok(Self::from_vec_unchecked(g, out))
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_norm(self, p)
    }

    pub fn l2_norm(&self) -> f64 {
        l2_norm_slice(&self.values, self.grid.cell_volume())
    }

    /// Serializes to the binary block format.
    pub fn to_block_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 16 * self.values.len());
        write_block(
            &mut out,
            self.grid.n() as u8,
            self.grid.m() as u8,
            self.grid.level() as u8,
            &self.values,
        )
        .expect("writing to a Vec cannot fail");
        out
    }

    pub fn write_block<W: Write>(&self, w: &mut W) -> Result<()> {
        write_block(
            w,
            self.grid.n() as u8,
            self.grid.m() as u8,
            self.grid.level() as u8,
            &self.values,
        )
    }

    pub fn read_block<R: Read>(r: &mut R) -> Result<Self> {
        let block = read_block(r)?;
        let grid = Grid::new(block.n as usize, block.m as usize, block.level as u32)
            .map_err(|e| FlagError::Format(format!("block header describes an invalid grid: {e}")))?;
        Self::new(grid, block.values)
    }

    pub fn from_block_bytes(bytes: &[u8]) -> Result<Self> {
        Self::read_block(&mut &bytes[..])
    }

    /// CSV export with one row per lattice point: coordinates, then `re,im`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        let d = self.grid.dim();
        let header: Vec<String> = (0..d).map(|a| format!("i{a}")).collect();
        writeln!(w, "{},re,im", header.join(","))?;
        for (i, v) in self.values.iter().enumerate() {
            let c: Vec<String> = self.grid.coords(i).iter().map(|c| c.to_string()).collect();
            writeln!(w, "{},{:e},{:e}", c.join(","), v.re, v.im)?;
        }
        Ok(())
    }
}

pub(crate) fn same_grid(a: Grid, b: Grid) -> Result<()> {
    if a != b {
        return Err(FlagError::Shape(format!(
            "grid mismatch: (n={}, m={}, L={}) vs (n={}, m={}, L={})",
            a.n, a.m, a.level, b.n, b.m, b.level
        )));
    }
    Ok(())
}

/// `(Σ |f|^p · spacing^{n+m})^{1/p}`; a quasi-norm for `p < 1`.
pub fn lp_norm(f: &SampledFunction, p: f64) -> Result<f64> {
    lp_norm_real(&f.abs(), f.grid.cell_volume(), p)
}

/// Same as [`lp_norm`] for nonnegative samples with cell measure `vol`.
pub fn lp_norm_real(abs_values: &[f64], vol: f64, p: f64) -> Result<f64> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(FlagError::Domain(format!(
            "exponent p must be positive and finite, got {p}"
        )));
    }
    let peak = abs_values.iter().fold(0.0f64, |a, &b| a.max(b));
    if peak == 0.0 {
        return Ok(0.0);
    }
    // Scale by the peak so large exponents cannot overflow.
    let powered: Vec<f64> = abs_values.iter().map(|&v| (v / peak).powf(p)).collect();
    Ok(peak * (pairwise_sum(&powered) * vol).powf(1.0 / p))
}

pub(crate) fn l2_norm_slice(values: &[Complex64], vol: f64) -> f64 {
    let sq: Vec<f64> = values.iter().map(|v| v.norm_sqr()).collect();
    (pairwise_sum(&sq) * vol).sqrt()
}

const PAIRWISE_THRESHOLD: usize = 1 << 15;

/// Pairwise summation above 2^15 entries, plain summation below.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_THRESHOLD {
        return xs.iter().sum();
    }
    fn rec(xs: &[f64]) -> f64 {
        if xs.len() <= 256 {
            xs.iter().sum()
        } else {
            let mid = xs.len() / 2;
            rec(&xs[..mid]) + rec(&xs[mid..])
        }
    }
    rec(xs)
}

/// A dyadic rectangle `I × J` of the flag geometry.
///
/// `side(I) = 2^{-j-N}` and `side(J) = 2^{-min(j,k)-N}`; the anchors are the
/// lower-left corners.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicRectangle {
    pub j: u32,
    pub k: u32,
    #[serde(rename = "N")]
    pub offset: u32,
    #[serde(rename = "iIdx")]
    pub i_idx: Vec<u32>,
    #[serde(rename = "jIdx")]
    pub j_idx: Vec<u32>,
}

impl DyadicRectangle {
    pub fn x_level(&self) -> u32 {
        self.j + self.offset
    }

    pub fn y_level(&self) -> u32 {
        self.j.min(self.k) + self.offset
    }

    pub fn side_i(&self) -> f64 {
        (-(self.x_level() as f64)).exp2()
    }

    pub fn side_j(&self) -> f64 {
        (-(self.y_level() as f64)).exp2()
    }

    pub fn measure(&self) -> f64 {
        self.side_i().powi(self.i_idx.len() as i32) * self.side_j().powi(self.j_idx.len() as i32)
    }

    /// Per-axis dyadic level, first factor then second.
    pub fn axis_levels(&self) -> Vec<u32> {
        let mut v = vec![self.x_level(); self.i_idx.len()];
        v.extend(std::iter::repeat_n(self.y_level(), self.j_idx.len()));
        v
    }

    pub fn axis_indices(&self) -> Vec<u32> {
        self.i_idx.iter().chain(&self.j_idx).copied().collect()
    }

    /// Lower-left corner as torus coordinates.
    pub fn anchor(&self) -> Vec<f64> {
        self.axis_indices()
            .iter()
            .zip(self.axis_levels())
            .map(|(&i, l)| i as f64 * (-(l as f64)).exp2())
            .collect()
    }

    /// Half-open range of lattice coordinates covered along each axis.
    pub fn cell_ranges(&self, grid: Grid) -> Result<Vec<(usize, usize)>> {
        self.axis_indices()
            .iter()
            .zip(self.axis_levels())
            .map(|(&i, l)| {
                if l > grid.level() {
                    return Err(FlagError::Resolution(format!(
                        "rectangle level {l} is finer than grid level {}",
                        grid.level()
                    )));
                }
                let w = 1usize << (grid.level() - l);
                Ok((i as usize * w, (i as usize + 1) * w))
            })
            .collect()
    }

    /// True when `self` is contained in `other` (closed dyadic containment).
    pub fn is_within(&self, other: &DyadicRectangle) -> bool {
        let (a, b) = (self.axis_levels(), other.axis_levels());
        if a.len() != b.len() || self.i_idx.len() != other.i_idx.len() {
            return false;
        }
        let (ia, ib) = (self.axis_indices(), other.axis_indices());
        a.iter()
            .zip(&b)
            .zip(ia.iter().zip(&ib))
            .all(|((&la, &lb), (&xa, &xb))| la >= lb && (xa >> (la - lb)) == xb)
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.axis_indices()
            .iter()
            .zip(self.axis_levels())
            .zip(x)
            .all(|((&i, l), &xv)| (xv.rem_euclid(1.0) * (l as f64).exp2()).floor() as u32 == i)
    }
}

/// Shape of the anchor lattice for one `(j, k, N)` channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RectShape {
    pub n: usize,
    pub m: usize,
    pub x_level: u32,
    pub y_level: u32,
}

impl RectShape {
    pub fn new(grid: Grid, j: u32, k: u32, offset: u32) -> Result<Self> {
        let x_level = j + offset;
        let y_level = j.min(k) + offset;
        for (what, scale, lvl) in [("j", j, x_level), ("min(j,k)", j.min(k), y_level)] {
            if lvl > grid.level() {
                return Err(FlagError::Resolution(format!(
                    "scale {what}={scale} with N={offset} gives side 2^-{lvl}, finer than the grid spacing 2^-{}",
                    grid.level()
                )));
            }
        }
        Ok(Self {
            n: grid.n(),
            m: grid.m(),
            x_level,
            y_level,
        })
    }

    pub fn dim(&self) -> usize {
        self.n + self.m
    }

    pub fn axis_level(&self, axis: usize) -> u32 {
        if axis < self.n {
            self.x_level
        } else {
            self.y_level
        }
    }

    /// Anchors per axis.
    pub fn axis_len(&self, axis: usize) -> usize {
        1 << self.axis_level(axis)
    }

    pub fn len(&self) -> usize {
        1 << (self.n as u32 * self.x_level + self.m as u32 * self.y_level)
    }

    /// Anchors per axis, for all axes.
    pub fn dims(&self) -> Vec<usize> {
        (0..self.dim()).map(|a| self.axis_len(a)).collect()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn stride(&self, axis: usize) -> usize {
        ((axis + 1)..self.dim()).map(|a| self.axis_len(a)).product()
    }

    pub fn coords(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            let s = self.axis_len(a);
            out[a] = index % s;
            index /= s;
        }
        out
    }

    /// Measure of each rectangle in this shape.
    pub fn cell_measure(&self) -> f64 {
        (-((self.n as u32 * self.x_level + self.m as u32 * self.y_level) as f64)).exp2()
    }

    pub fn rectangle(&self, j: u32, k: u32, offset: u32, index: usize) -> DyadicRectangle {
        let c = self.coords(index);
        DyadicRectangle {
            j,
            k,
            offset,
            i_idx: c[..self.n].iter().map(|&v| v as u32).collect(),
            j_idx: c[self.n..].iter().map(|&v| v as u32).collect(),
        }
    }

    /// Index of `r` in this shape's row-major anchor order.
    pub fn index_of(&self, r: &DyadicRectangle) -> usize {
        r.axis_indices()
            .iter()
            .enumerate()
            .fold(0, |acc, (a, &i)| acc * self.axis_len(a) + i as usize)
    }

    /// Visits every grid point together with the anchor-lattice index of the
    /// rectangle containing it.
    pub fn for_each_cell(&self, grid: Grid, mut f: impl FnMut(usize, usize)) {
        let d = self.dim();
        let shifts: Vec<u32> = (0..d).map(|a| grid.level() - self.axis_level(a)).collect();
        let astrides: Vec<usize> = (0..d).map(|a| self.stride(a)).collect();
        let side = grid.side();
        let last = d - 1;
        let mut coords = vec![0usize; d];
        let mut gidx = 0usize;
        loop {
            let abase: usize = (0..last).map(|a| (coords[a] >> shifts[a]) * astrides[a]).sum();
            for c in 0..side {
                f(gidx + c, abase + (c >> shifts[last]));
            }
            gidx += side;
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

    /// Grid index of the lower-left anchor of each rectangle.
    pub fn anchor_grid_indices(&self, grid: Grid) -> Vec<usize> {
        let d = self.dim();
        (0..self.len())
            .map(|i| {
                let c = self.coords(i);
                let gc: Vec<usize> = (0..d).map(|a| c[a] << (grid.level() - self.axis_level(a))).collect();
                grid.index(&gc)
            })
            .collect()
    }
}

/// All rectangles at scale `(j, k)` with offset `N`, in row-major anchor order.
pub fn enumerate_rectangles(grid: Grid, j: u32, k: u32, offset: u32) -> Result<Vec<DyadicRectangle>> {
    let shape = RectShape::new(grid, j, k, offset)?;
    Ok((0..shape.len()).map(|i| shape.rectangle(j, k, offset, i)).collect())
}

pub(crate) const MAGIC: &[u8; 4] = b"FLGF";
pub(crate) const BLOCK_VERSION: u16 = 1;
pub(crate) const HEADER_LEN: usize = 32;

/// Raw contents of one binary block.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub n: u8,
    pub m: u8,
    pub level: u8,
    pub values: Vec<Complex64>,
}

/// Writes one block: a 32-byte header then little-endian `(re, im)` pairs.
pub fn write_block<W: Write>(w: &mut W, n: u8, m: u8, level: u8, values: &[Complex64]) -> Result<()> {
    let mut header = [0u8; HEADER_LEN];
    header[..4].copy_from_slice(MAGIC);
    header[4..6].copy_from_slice(&BLOCK_VERSION.to_le_bytes());
    header[6] = n;
    header[7] = m;
    header[8] = level;
    header[24..32].copy_from_slice(&((values.len() * 16) as u64).to_le_bytes());
    w.write_all(&header)?;
    let mut payload = Vec::with_capacity(values.len() * 16);
    for v in values {
        payload.extend_from_slice(&v.re.to_le_bytes());
        payload.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&payload)?;
    Ok(())
}

pub fn read_block<R: Read>(r: &mut R) -> Result<Block> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|e| FlagError::Format(format!("truncated block header: {e}")))?;
    if &header[..4] != MAGIC {
        return Err(FlagError::Format("bad magic, expected FLGF".into()));
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != BLOCK_VERSION {
        return Err(FlagError::Format(format!("unsupported block version {version}")));
    }
    let len = u64::from_le_bytes(header[24..32].try_into().expect("8 bytes"));
    if len % 16 != 0 || len > (1u64 << 36) {
        return Err(FlagError::Format(format!("invalid payload length {len}")));
    }
    let mut payload = vec![0u8; len as usize];
    r.read_exact(&mut payload)
        .map_err(|e| FlagError::Format(format!("truncated block payload: {e}")))?;
    let values = payload
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect();
    Ok(Block {
        n: header[6],
        m: header[7],
        level: header[8],
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_examples() {
        let g = make_grid(1, 1, 8).unwrap();
        assert_eq!(g.len(), 256 * 256);
        assert_eq!(g.spacing(), 1.0 / 256.0);
        assert_eq!(g.spacing() * g.side() as f64, 1.0);
        assert_eq!(make_grid(1, 1, 3).unwrap().len(), 64);
        assert_eq!(make_grid(2, 1, 6).unwrap().len(), 64 * 64 * 64);
        assert!(matches!(make_grid(0, 1, 5), Err(FlagError::Config(_))));
        assert!(matches!(make_grid(1, 1, 2), Err(FlagError::Config(_))));
        assert!(matches!(make_grid(1, 4, 5), Err(FlagError::Config(_))));
        assert!(matches!(make_grid(3, 3, 6), Err(FlagError::Config(_))));
    }

    #[test]
    fn coords_roundtrip() {
        let g = make_grid(2, 1, 3).unwrap();
        for i in [0, 1, 7, 8, 63, 64, 511] {
            assert_eq!(g.index(&g.coords(i)), i);
        }
        assert_eq!(g.coords(8), vec![0, 1, 0]);
        assert_eq!(9 % g.factor2_len(), g.coords(9)[2]);
    }

    #[test]
    fn rectangle_counts() {
        let g = make_grid(1, 1, 8).unwrap();
        let r = enumerate_rectangles(g, 0, 0, 2).unwrap();
        assert_eq!(r.len(), 16);
        assert_eq!(r[0].side_i(), 0.25);
        let r = enumerate_rectangles(g, 1, 3, 2).unwrap();
        assert_eq!(r.len(), 64);
        assert_eq!((r[0].side_i(), r[0].side_j()), (0.125, 0.125));
        let r = enumerate_rectangles(g, 3, 1, 2).unwrap();
        assert_eq!(r.len(), 32 * 8);
        assert_eq!((r[0].side_i(), r[0].side_j()), (1.0 / 32.0, 0.125));
        let total: f64 = r.iter().map(|r| r.measure()).sum();
        assert_eq!(total, 1.0);
        assert!(matches!(
            enumerate_rectangles(g, 7, 0, 2),
            Err(FlagError::Resolution(_))
        ));
    }

    #[test]
    fn rectangles_tile_the_grid() {
        let g = make_grid(1, 2, 4).unwrap();
        let shape = RectShape::new(g, 1, 0, 1).unwrap();
        let mut counts = vec![0usize; shape.len()];
        shape.for_each_cell(g, |_, a| counts[a] += 1);
        let per = g.len() / shape.len();
        assert!(counts.iter().all(|&c| c == per));
        let rects = enumerate_rectangles(g, 1, 0, 1).unwrap();
        shape.for_each_cell(g, |gi, a| {
            let x: Vec<f64> = g.coords(gi).iter().map(|&c| c as f64 * g.spacing()).collect();
            assert!(rects[a].contains_point(&x));
        });
    }

    #[test]
    fn nesting_by_index_arithmetic() {
        let g = make_grid(1, 1, 6).unwrap();
        let fine = enumerate_rectangles(g, 2, 3, 1).unwrap();
        let coarse = enumerate_rectangles(g, 1, 3, 1).unwrap();
        for r in &fine {
            assert_eq!(coarse.iter().filter(|c| r.is_within(c)).count(), 1);
        }
    }

    #[test]
    fn lp_norm_examples() {
        let g = make_grid(1, 1, 4).unwrap();
        assert_eq!(lp_norm(&SampledFunction::zeros(g), 2.0).unwrap(), 0.0);
        let one = SampledFunction::constant(g, Complex64::new(1.0, 0.0));
        for p in [0.5, 1.0, 2.0, 3.0] {
            assert!((lp_norm(&one, p).unwrap() - 1.0).abs() < 1e-14);
        }
        let half: Vec<f64> = (0..g.len()).map(|i| (i % 2) as f64).collect();
        let half = SampledFunction::from_real(g, &half).unwrap();
        assert!((lp_norm(&half, 2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-14);
        assert!(matches!(lp_norm(&one, 0.0), Err(FlagError::Domain(_))));
        assert!(matches!(lp_norm(&one, -1.0), Err(FlagError::Domain(_))));
    }

    #[test]
    fn non_finite_rejected() {
        let g = make_grid(1, 1, 3).unwrap();
        let mut v = vec![Complex64::new(0.0, 0.0); 64];
        v[5] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(
            SampledFunction::new(g, v),
            Err(FlagError::NonFinite { index: 5 })
        ));
        assert!(matches!(
            SampledFunction::new(g, vec![Complex64::new(0.0, 0.0); 3]),
            Err(FlagError::Shape(_))
        ));
    }

    #[test]
    fn block_roundtrip() {
        let g = make_grid(1, 1, 3).unwrap();
        let f = SampledFunction::from_fn(g, |x| Complex64::new(x[0], -x[1])).unwrap();
        let bytes = f.to_block_bytes();
        assert_eq!(&bytes[..4], b"FLGF");
        assert_eq!(bytes.len(), 32 + 64 * 16);
        assert_eq!(u64::from_le_bytes(bytes[24..32].try_into().unwrap()), 64 * 16);
        assert_eq!(SampledFunction::from_block_bytes(&bytes).unwrap(), f);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            SampledFunction::from_block_bytes(&bad),
            Err(FlagError::Format(_))
        ));
        assert!(matches!(
            SampledFunction::from_block_bytes(&bytes[..100]),
            Err(FlagError::Format(_))
        ));
    }

    #[test]
    fn csv_export() {
        let g = make_grid(1, 1, 3).unwrap();
        let f = SampledFunction::constant(g, Complex64::new(2.0, 0.5));
        let mut out = Vec::new();
        f.write_csv(&mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert_eq!(s.lines().count(), 65);
        assert!(s.starts_with("i0,i1,re,im\n0,0,2e0,5e-1"));
    }

    #[test]
    fn translate_is_cyclic() {
        let g = make_grid(1, 1, 3).unwrap();
        let f = SampledFunction::from_fn(g, |x| Complex64::new(x[0] * 8.0 + 10.0 * x[1], 0.0)).unwrap();
        let t = f.translate(&[1, -2]).unwrap();
        assert_eq!(t.values()[g.index(&[1, 6])], f.values()[0]);
        assert_eq!(t.translate(&[-1, 2]).unwrap(), f);
    }
}
