//! One-parameter filter families on each factor and their flag lift.
//!
//! Spectra are stored as real arrays in the lattice-frequency order of the FFT.
//! The spatial samples of a filter with spectrum `a` are
//! `psi(x) = sum_xi a(xi) e^{2 pi i xi x}`, and convolution with a sampled
//! function uses the measure `spacing^{n+m}`, so `psi * f = IDFT(a . DFT f)`.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FlagError, Result};
use crate::fft::LatticeFft;
use crate::grid::{write_block, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterMode {
    FrequencyAnnulus,
    CompactSpatial,
}

impl FilterMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            FilterMode::FrequencyAnnulus => "frequency-annulus",
            FilterMode::CompactSpatial => "compact-spatial",
        }
    }
}

impl std::str::FromStr for FilterMode {
    type Err = FlagError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frequency-annulus" | "annulus" => Ok(FilterMode::FrequencyAnnulus),
            "compact-spatial" | "compact" => Ok(FilterMode::CompactSpatial),
            other => Err(FlagError::Config(format!("unknown filter mode '{other}'"))),
        }
    }
}

/// Shape parameters of a filter family.
///
/// Radii are measured in units of `base_frequency` cycles per unit length.
/// The radial cutoff equals 1 up to `2 * inner_radius`, vanishes from
/// `outer_radius` on, and blends with `exp(-smoothness / t)` in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterProfile {
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub smoothness: f64,
    pub base_frequency: f64,
    pub mode: FilterMode,
    pub moment_order: u32,
}

impl Default for FilterProfile {
    fn default() -> Self {
        Self {
            inner_radius: 0.5,
            outer_radius: 2.0,
            smoothness: 1.0,
            base_frequency: 0.4,
            mode: FilterMode::FrequencyAnnulus,
            moment_order: 1,
        }
    }
}

impl FilterProfile {
    pub fn compact(moment_order: u32) -> Self {
        Self {
            mode: FilterMode::CompactSpatial,
            moment_order,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.inner_radius,
            self.outer_radius,
            self.smoothness,
            self.base_frequency,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(FlagError::Config("profile parameters must be finite".into()));
        }
        if self.inner_radius <= 0.0 {
            return Err(FlagError::Config(format!(
                "inner radius must be positive, got {}",
                self.inner_radius
            )));
        }
        if self.inner_radius >= self.outer_radius {
            return Err(FlagError::Config(format!(
                "profile radii inverted: inner {} >= outer {}",
                self.inner_radius, self.outer_radius
            )));
        }
        if 2.0 * self.inner_radius >= self.outer_radius {
            return Err(FlagError::Config(format!(
                "profile transition empty: 2 * inner {} >= outer {}",
                self.inner_radius, self.outer_radius
            )));
        }
        if self.smoothness <= 0.0 || self.base_frequency <= 0.0 {
            return Err(FlagError::Config(
                "smoothness and base frequency must be positive".into(),
            ));
        }
        if self.mode == FilterMode::CompactSpatial && self.moment_order == 0 {
            return Err(FlagError::Config("compact mode needs moment order >= 1".into()));
        }
        Ok(())
    }

    /// Smooth radial cutoff in profile units.
    pub fn cutoff(&self, r: f64) -> f64 {
        let a = 2.0 * self.inner_radius;
        let b = self.outer_radius;
        if r <= a {
            return 1.0;
        }
        if r >= b {
            return 0.0;
        }
        let t = (r - a) / (b - a);
        let e = |s: f64| if s <= 0.0 { 0.0 } else { (-self.smoothness / s).exp() };
        let (lo, hi) = (e(1.0 - t), e(t));
        lo / (lo + hi)
    }

    /// Annulus filter response at scale `j` for a frequency of modulus `cycles`.
    pub fn annulus(&self, j: u32, cycles: f64) -> f64 {
        let w = cycles / self.base_frequency;
        let s = (-(j as f64)).exp2();
        (self.cutoff(w * s) - self.cutoff(2.0 * w * s)).max(0.0).sqrt()
    }
}

/// Number of vanishing moments carried by a bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentOrder {
    Infinite,
    Finite(u32),
}

/// Frequency-side filter families for both factors plus the low-pass completion.
#[derive(Debug, Clone)]
pub struct FilterBank {
    grid: Grid,
    profile: FilterProfile,
    offset: u32,
    j_range: (u32, u32),
    k_range: (u32, u32),
    psi1: Vec<Vec<f64>>,
    psi2: Vec<Vec<f64>>,
    low_pass1: Vec<f64>,
    low_pass2: Vec<f64>,
    low_pass: Vec<f64>,
    spatial1: Option<Vec<Vec<f64>>>,
    spatial2: Option<Vec<Vec<f64>>>,
    residuals: Residuals,
    moment_order: MomentOrder,
}

/// Partition diagnostics of a bank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Residuals {
    /// Deviation of the first-factor sum from 1 on the covered band.
    pub calderon_residual1: f64,
    /// Deviation of the second-factor sum from 1 on the covered band.
    pub calderon_residual2: f64,
    /// First-factor partition including its completion, over all frequencies.
    pub partition_residual1: f64,
    pub partition_residual2: f64,
    /// Flag partition including the low-pass channel, over all frequencies.
    pub partition_residual: f64,
}

/// Lattice-frequency moduli over the first `dim` axes of a cubic lattice.
fn frequency_moduli(side: usize, dim: usize) -> Vec<f64> {
    let half = side as i64 / 2;
    let freq2: Vec<f64> = (0..side as i64)
        .map(|c| {
            let f = if c < half { c } else { c - side as i64 };
            (f * f) as f64
        })
        .collect();
    let len = side.pow(dim as u32);
    (0..len)
        .map(|mut i| {
            let mut s = 0.0;
            for _ in 0..dim {
                s += freq2[i % side];
                i /= side;
            }
            s.sqrt()
        })
        .collect()
}

/// Minimal-image distances, in samples, from the origin of a cubic lattice.
fn spatial_radii(side: usize, dim: usize) -> Vec<f64> {
    frequency_moduli(side, dim)
}

fn scale_window(grid: Grid, offset: u32) -> Result<u32> {
    if offset == 0 {
        return Err(FlagError::Config("sampling offset N must be at least 1".into()));
    }
    if offset + 1 > grid.level() {
        return Err(FlagError::Resolution(format!(
            "grid level {} too coarse for N={offset}: scale window [0, L-N-1] is empty",
            grid.level()
        )));
    }
    Ok(grid.level() - offset - 1)
}

/// Builds an annulus-mode bank with scales `0..=L-N-1` on both factors.
pub fn build_filter_bank(grid: Grid, profile: FilterProfile, offset: u32) -> Result<FilterBank> {
    profile.validate()?;
    if profile.mode == FilterMode::CompactSpatial {
        return build_compact_bank_with(grid, profile, offset);
    }
    let jmax = scale_window(grid, offset)?;
    let side = grid.side();
    let r1 = frequency_moduli(side, grid.dim());
    let r2 = frequency_moduli(side, grid.m());
    let psi1: Vec<Vec<f64>> = (0..=jmax)
        .map(|j| r1.iter().map(|&r| profile.annulus(j, r)).collect())
        .collect();
    let psi2: Vec<Vec<f64>> = (0..=jmax)
        .map(|k| r2.iter().map(|&r| profile.annulus(k, r)).collect())
        .collect();
    let covered = |r: f64| {
        let w = r / profile.base_frequency;
        w >= profile.outer_radius / 2.0 && w <= 2.0 * profile.inner_radius * (jmax as f64).exp2()
    };
    Ok(FilterBank::assemble(
        grid,
        profile,
        offset,
        jmax,
        psi1,
        psi2,
        None,
        None,
        &r1,
        &r2,
        &covered,
        MomentOrder::Infinite,
    ))
}

/// Builds a compact-spatial-mode bank whose filters have `M0` vanishing moments.
pub fn build_compact_bank(grid: Grid, moment_order: u32, offset: u32) -> Result<FilterBank> {
    build_compact_bank_with(grid, FilterProfile::compact(moment_order), offset)
}

fn build_compact_bank_with(grid: Grid, profile: FilterProfile, offset: u32) -> Result<FilterBank> {
    let profile = FilterProfile {
        mode: FilterMode::CompactSpatial,
        ..profile
    };
    profile.validate()?;
    let jmax = scale_window(grid, offset)?;
    let powers = (profile.moment_order + 1).div_ceil(2);
    let (spatial1, psi1) = compact_family(grid, grid.dim(), jmax, powers)?;
    let (spatial2, psi2) = compact_family(grid, grid.m(), jmax, powers)?;
    let r1 = frequency_moduli(grid.side(), grid.dim());
    let r2 = frequency_moduli(grid.side(), grid.m());
    let covered = |r: f64| {
        let w = r / profile.base_frequency;
        w >= profile.outer_radius / 2.0 && w <= 2.0 * profile.inner_radius * (jmax as f64).exp2()
    };
    Ok(FilterBank::assemble(
        grid,
        profile,
        offset,
        jmax,
        psi1,
        psi2,
        Some(spatial1),
        Some(spatial2),
        &r1,
        &r2,
        &covered,
        MomentOrder::Finite(2 * powers - 1),
    ))
}

type Family = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Iterated discrete Laplacians of a bump, one per scale, normalized so the
/// squared responses sum to at most 1.
fn compact_family(grid: Grid, dim: usize, jmax: u32, powers: u32) -> Result<Family> {
    let side = grid.side();
    let len = side.pow(dim as u32);
    let radii = spatial_radii(side, dim);
    let vol = grid.spacing().powi(dim as i32);
    let fft = LatticeFft::new(side, dim);
    let mut spatial = Vec::new();
    let mut spectra = Vec::new();
    for j in 0..=jmax {
        let support = (side >> (j + 1)) as f64;
        let mut step = 1usize;
        while (2 * step * 4 * powers as usize) as f64 <= support {
            step *= 2;
        }
        let bump_radius = support - (powers as usize * step) as f64;
        if bump_radius < 2.0 {
            return Err(FlagError::Resolution(format!(
                "compact filter at scale j={j} has support radius {support} samples, too small for {powers} Laplacian powers"
            )));
        }
        let mut u: Vec<f64> = radii
            .iter()
            .map(|&r| {
                let t = r / bump_radius;
                if t < 1.0 {
                    (-1.0 / (1.0 - t * t)).exp()
                } else {
                    0.0
                }
            })
            .collect();
        for _ in 0..powers {
            u = laplacian(&u, side, dim, step);
        }
        let spec = fft.forward_vec(&u.iter().map(|&v| Complex64::new(v, 0.0)).collect::<Vec<_>>());
        let peak = spec.iter().fold(0.0f64, |a, v| a.max(v.re.abs()));
        let scale = 1.0 / peak;
        spectra.push(spec.iter().map(|v| v.re * scale).collect::<Vec<f64>>());
        spatial.push(u.iter().map(|v| v * scale / vol).collect::<Vec<f64>>());
    }
    let mut total = vec![0.0; len];
    for s in &spectra {
        for (t, v) in total.iter_mut().zip(s) {
            *t += v * v;
        }
    }
    let norm = 1.0 / total.iter().fold(0.0f64, |a, &b| a.max(b)).sqrt();
    for s in spectra.iter_mut().chain(spatial.iter_mut()) {
        s.iter_mut().for_each(|v| *v *= norm);
    }
    Ok((spatial, spectra))
}

fn laplacian(u: &[f64], side: usize, dim: usize, step: usize) -> Vec<f64> {
    let mut out: Vec<f64> = u.iter().map(|v| -2.0 * dim as f64 * v).collect();
    for axis in 0..dim {
        let stride = side.pow((dim - 1 - axis) as u32);
        for (i, o) in out.iter_mut().enumerate() {
            let c = (i / stride) % side;
            let base = i - c * stride;
            *o += u[base + ((c + step) % side) * stride] + u[base + ((c + side - step) % side) * stride];
        }
    }
    out
}

impl FilterBank {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        grid: Grid,
        profile: FilterProfile,
        offset: u32,
        jmax: u32,
        psi1: Vec<Vec<f64>>,
        psi2: Vec<Vec<f64>>,
        spatial1: Option<Vec<Vec<f64>>>,
        spatial2: Option<Vec<Vec<f64>>>,
        r1: &[f64],
        r2: &[f64],
        covered: &dyn Fn(f64) -> bool,
        moment_order: MomentOrder,
    ) -> Self {
        let sum_sq = |fam: &[Vec<f64>], len: usize| {
            let mut s = vec![0.0; len];
            for f in fam {
                for (t, v) in s.iter_mut().zip(f) {
                    *t += v * v;
                }
            }
            s
        };
        let s1 = sum_sq(&psi1, r1.len());
        let s2 = sum_sq(&psi2, r2.len());
        let low_pass1: Vec<f64> = s1.iter().map(|v| (1.0 - v).max(0.0).sqrt()).collect();
        let low_pass2: Vec<f64> = s2.iter().map(|v| (1.0 - v).max(0.0).sqrt()).collect();
        let m_len = r2.len();
        let low_pass: Vec<f64> = s1
            .iter()
            .enumerate()
            .map(|(i, v)| (1.0 - v * s2[i % m_len]).max(0.0).sqrt())
            .collect();
        let band_residual = |s: &[f64], r: &[f64]| {
            s.iter()
                .zip(r)
                .filter(|(_, &r)| covered(r))
                .fold(0.0f64, |a, (v, _)| a.max((v - 1.0).abs()))
        };
        let full_residual = |s: &[f64], lp: &[f64]| {
            s.iter()
                .zip(lp)
                .fold(0.0f64, |a, (v, l)| a.max((v + l * l - 1.0).abs()))
        };
        let flag_residual = s1.iter().enumerate().fold(0.0f64, |a, (i, v)| {
            a.max((v * s2[i % m_len] + low_pass[i] * low_pass[i] - 1.0).abs())
        });
        let residuals = Residuals {
            calderon_residual1: band_residual(&s1, r1),
            calderon_residual2: band_residual(&s2, r2),
            partition_residual1: full_residual(&s1, &low_pass1),
            partition_residual2: full_residual(&s2, &low_pass2),
            partition_residual: flag_residual,
        };
        Self {
            grid,
            profile,
            offset,
            j_range: (0, jmax),
            k_range: (0, jmax),
            psi1,
            psi2,
            low_pass1,
            low_pass2,
            low_pass,
            spatial1,
            spatial2,
            residuals,
            moment_order,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn profile(&self) -> &FilterProfile {
        &self.profile
    }

    pub fn mode(&self) -> FilterMode {
        self.profile.mode
    }

    /// Offset `N` the scale window was derived from.
    pub fn offset(&self) -> u32 {
        self.offset
    }

    pub fn j_range(&self) -> (u32, u32) {
        self.j_range
    }

    pub fn k_range(&self) -> (u32, u32) {
        self.k_range
    }

    pub fn residuals(&self) -> Residuals {
        self.residuals
    }

    pub fn moment_order(&self) -> MomentOrder {
        self.moment_order
    }

    /// Short identifier used in reports.
    pub fn id(&self) -> String {
        let p = &self.profile;
        match p.mode {
            FilterMode::FrequencyAnnulus => format!(
                "annulus(inner={},outer={},smooth={},base={},N={},L={})",
                p.inner_radius,
                p.outer_radius,
                p.smoothness,
                p.base_frequency,
                self.offset,
                self.grid.level()
            ),
            FilterMode::CompactSpatial => format!(
                "compact(M0={},N={},L={})",
                p.moment_order,
                self.offset,
                self.grid.level()
            ),
        }
    }

    fn check_j(&self, j: u32) -> Result<usize> {
        if j < self.j_range.0 || j > self.j_range.1 {
            return Err(FlagError::Range(format!(
                "j={j} outside [{}, {}]",
                self.j_range.0, self.j_range.1
            )));
        }
        Ok((j - self.j_range.0) as usize)
    }

    fn check_k(&self, k: u32) -> Result<usize> {
        if k < self.k_range.0 || k > self.k_range.1 {
            return Err(FlagError::Range(format!(
                "k={k} outside [{}, {}]",
                self.k_range.0, self.k_range.1
            )));
        }
        Ok((k - self.k_range.0) as usize)
    }

    /// First-factor spectrum over the full lattice.
    pub fn psi1(&self, j: u32) -> Result<&[f64]> {
        Ok(&self.psi1[self.check_j(j)?])
    }

    /// Second-factor spectrum over the `m`-dimensional lattice.
    pub fn psi2(&self, k: u32) -> Result<&[f64]> {
        Ok(&self.psi2[self.check_k(k)?])
    }

    pub fn low_pass1(&self) -> &[f64] {
        &self.low_pass1
    }

    pub fn low_pass2(&self) -> &[f64] {
        &self.low_pass2
    }

    /// Flag low-pass completion over the full lattice.
    pub fn low_pass(&self) -> &[f64] {
        &self.low_pass
    }

    pub fn scales(&self) -> Vec<(u32, u32)> {
        let mut v = Vec::new();
        for j in self.j_range.0..=self.j_range.1 {
            for k in self.k_range.0..=self.k_range.1 {
                v.push((j, k));
            }
        }
        v
    }

    /// Lifted spectrum `psi1_j(xi1, xi2) * psi2_k(xi2)`.
    pub fn lift(&self, j: u32, k: u32) -> Result<Vec<f64>> {
        let a = self.psi1(j)?;
        let b = self.psi2(k)?;
        let m_len = b.len();
        Ok(a.iter().enumerate().map(|(i, v)| v * b[i % m_len]).collect())
    }

    /// True when the lifted spectrum has any nonzero entry.
    pub fn is_active(&self, j: u32, k: u32) -> bool {
        match (self.psi1(j), self.psi2(k)) {
            (Ok(a), Ok(b)) => {
                let m_len = b.len();
                a.iter().enumerate().any(|(i, v)| *v != 0.0 && b[i % m_len] != 0.0)
            }
            _ => false,
        }
    }

    /// Spatial samples of the first-factor filter at scale `j`.
    pub fn spatial_psi1(&self, j: u32) -> Result<Vec<f64>> {
        if let Some(s) = &self.spatial1 {
            return Ok(s[self.check_j(j)?].clone());
        }
        Ok(spatial_samples(self.psi1(j)?, self.grid.side(), self.grid.dim()))
    }

    pub fn spatial_psi2(&self, k: u32) -> Result<Vec<f64>> {
        if let Some(s) = &self.spatial2 {
            return Ok(s[self.check_k(k)?].clone());
        }
        Ok(spatial_samples(self.psi2(k)?, self.grid.side(), self.grid.m()))
    }

    /// Spatial samples of the lifted filter at scale `(j, k)`.
    pub fn spatial_lift(&self, j: u32, k: u32) -> Result<Vec<f64>> {
        Ok(spatial_samples(&self.lift(j, k)?, self.grid.side(), self.grid.dim()))
    }

    /// Evaluates the first-factor filter at an arbitrary torus point as a trigonometric polynomial.
    pub fn psi1_at(&self, j: u32, x: &[f64]) -> Result<f64> {
        trig_eval(self.psi1(j)?, self.grid.side(), x)
    }

    pub fn psi2_at(&self, k: u32, z: &[f64]) -> Result<f64> {
        trig_eval(self.psi2(k)?, self.grid.side(), z)
    }

    /// Max-abs spatial cross-correlation of first-factor filters at `j` and `j2`.
    pub fn cross_correlation1(&self, j: u32, j2: u32) -> Result<f64> {
        let (a, b) = (self.psi1(j)?, self.psi1(j2)?);
        let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
        Ok(peak(&prod, self.grid.side(), self.grid.dim()))
    }

    /// Max-abs spatial cross-correlation of lifted filters.
    pub fn cross_correlation_flag(&self, a: (u32, u32), b: (u32, u32)) -> Result<f64> {
        let (x, y) = (self.lift(a.0, a.1)?, self.lift(b.0, b.1)?);
        let prod: Vec<f64> = x.iter().zip(&y).map(|(u, v)| u * v).collect();
        Ok(peak(&prod, self.grid.side(), self.grid.dim()))
    }

    /// Geometric decay rate per unit scale gap of the first-factor cross-correlations.
    ///
    /// Returns `None` when correlations vanish beyond gap 1, which is the
    /// exact-orthogonality case.
    pub fn decay_rate1(&self) -> Result<Option<f64>> {
        let (lo, hi) = self.j_range;
        let span = hi - lo;
        let mut peaks = Vec::new();
        for gap in 1..=span {
            let mut best = 0.0f64;
            for j in lo..=(hi - gap) {
                let norm = (self.cross_correlation1(j, j)? * self.cross_correlation1(j + gap, j + gap)?).sqrt();
                if norm > 0.0 {
                    best = best.max(self.cross_correlation1(j, j + gap)? / norm);
                }
            }
            peaks.push(best);
        }
        if peaks.len() < 2 || peaks[1..].iter().all(|&p| p == 0.0) {
            return Ok(None);
        }
        let last = peaks.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        if last == 0 {
            return Ok(None);
        }
        Ok(Some((peaks[0] / peaks[last]).powf(1.0 / last as f64)))
    }

    /// Writes every spectrum as one binary block into a single file and
    /// returns the manifest describing each block.
    pub fn export<W: Write>(&self, w: &mut W) -> Result<BankManifest> {
        let g = self.grid;
        let mut entries = Vec::new();
        let mut offset = 0u64;
        let mut put = |w: &mut W, factor: &str, scale: Option<u32>, data: &[f64], m_only: bool| -> Result<()> {
            let values: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            let (n, m) = if m_only {
                (0, g.m() as u8)
            } else {
                (g.n() as u8, g.m() as u8)
            };
            write_block(w, n, m, g.level() as u8, &values)?;
            let bytes = 32 + 16 * values.len() as u64;
            entries.push(BankEntry {
                factor: factor.to_string(),
                scale,
                offset,
                bytes,
            });
            offset += bytes;
            Ok(())
        };
        for (i, s) in self.psi1.iter().enumerate() {
            put(w, "psi1", Some(self.j_range.0 + i as u32), s, false)?;
        }
        for (i, s) in self.psi2.iter().enumerate() {
            put(w, "psi2", Some(self.k_range.0 + i as u32), s, true)?;
        }
        put(w, "lowpass1", None, &self.low_pass1, false)?;
        put(w, "lowpass2", None, &self.low_pass2, true)?;
        put(w, "lowpass", None, &self.low_pass, false)?;
        Ok(BankManifest {
            n: g.n(),
            m: g.m(),
            level: g.level(),
            offset_n: self.offset,
            mode: self.profile.mode,
            j_range: self.j_range,
            k_range: self.k_range,
            entries,
        })
    }

    /// Writes `bank.flgf` and `bank.json` into `dir`.
    pub fn export_to_dir(&self, dir: &Path) -> Result<BankManifest> {
        std::fs::create_dir_all(dir)?;
        let mut file = std::io::BufWriter::new(std::fs::File::create(dir.join("bank.flgf"))?);
        let manifest = self.export(&mut file)?;
        file.flush()?;
        std::fs::write(dir.join("bank.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(manifest)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankEntry {
    pub factor: String,
    pub scale: Option<u32>,
    pub offset: u64,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BankManifest {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "L")]
    pub level: u32,
    #[serde(rename = "N")]
    pub offset_n: u32,
    pub mode: FilterMode,
    pub j_range: (u32, u32),
    pub k_range: (u32, u32),
    pub entries: Vec<BankEntry>,
}

/// `sum_xi a(xi) e^{2 pi i xi x}` at every lattice point.
pub fn spatial_samples(spectrum: &[f64], side: usize, dim: usize) -> Vec<f64> {
    let fft = LatticeFft::new(side, dim);
    let mut v: Vec<Complex64> = spectrum.iter().map(|&a| Complex64::new(a, 0.0)).collect();
    fft.inverse(&mut v);
    let s = side.pow(dim as u32) as f64;
    v.iter().map(|c| c.re * s).collect()
}

fn peak(spectrum: &[f64], side: usize, dim: usize) -> f64 {
    if spectrum.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    spatial_samples(spectrum, side, dim)
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()))
}

fn trig_eval(spectrum: &[f64], side: usize, x: &[f64]) -> Result<f64> {
    let dim = x.len();
    if side.pow(dim as u32) != spectrum.len() {
        return Err(FlagError::Shape(format!(
            "point has {dim} coordinates, spectrum does not match"
        )));
    }
    let half = side as i64 / 2;
    let mut sum = 0.0;
    for (i, &a) in spectrum.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        let mut idx = i;
        let mut phase = 0.0;
        for a_x in (0..dim).rev() {
            let c = (idx % side) as i64;
            idx /= side;
            let f = if c < half { c } else { c - side as i64 };
            phase += f as f64 * x[a_x];
        }
        sum += a * (2.0 * std::f64::consts::PI * phase).cos();
    }
    Ok(sum)
}

/// Largest discrete moment `|sum_x phi(x) x^alpha spacing^dim|` over `|alpha| <= order`,
/// with `x` the minimal-image coordinates.
pub fn max_moment(values: &[f64], side: usize, dim: usize, order: u32) -> f64 {
    let h = 1.0 / side as f64;
    let vol = h.powi(dim as i32);
    let half = side as i64 / 2;
    let mut alphas: Vec<Vec<u32>> = vec![vec![]];
    for _ in 0..dim {
        alphas = alphas
            .into_iter()
            .flat_map(|a| {
                (0..=order).map(move |e| {
                    let mut b = a.clone();
                    b.push(e);
                    b
                })
            })
            .filter(|a| a.iter().sum::<u32>() <= order)
            .collect();
    }
    let mut worst = 0.0f64;
    for alpha in &alphas {
        let mut s = 0.0;
        for (i, &v) in values.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let mut idx = i;
            let mut mono = 1.0;
            for a in (0..dim).rev() {
                let c = (idx % side) as i64;
                idx /= side;
                let x = (if c < half { c } else { c - side as i64 }) as f64 * h;
                mono *= x.powi(alpha[a] as i32);
            }
            s += v * mono * vol;
        }
        worst = worst.max(s.abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn default_bank_partition() {
        let g = make_grid(1, 1, 8).unwrap();
        let bank = build_filter_bank(g, FilterProfile::default(), 2).unwrap();
        assert_eq!(bank.j_range(), (0, 5));
        let r = bank.residuals();
        assert!(r.calderon_residual1 <= 1e-10, "{r:?}");
        assert!(r.calderon_residual2 <= 1e-10, "{r:?}");
        assert!(r.partition_residual1 <= 1e-10);
        assert!(r.partition_residual2 <= 1e-10);
        assert!(r.partition_residual <= 1e-10);
        for j in 0..=5 {
            assert_eq!(bank.psi1(j).unwrap()[0], 0.0);
            assert_eq!(bank.psi2(j).unwrap()[0], 0.0);
        }
        assert_eq!(bank.low_pass1()[0], 1.0);
        assert_eq!(bank.low_pass()[0], 1.0);
    }

    #[test]
    fn dilation_relation() {
        let g = make_grid(1, 1, 8).unwrap();
        let p = FilterProfile::default();
        for j in 0..5 {
            for r in [0.3, 1.0, 2.7, 5.0, 11.0, 17.5] {
                assert!((p.annulus(j + 1, r) - p.annulus(j, r / 2.0)).abs() < 1e-15);
            }
        }
        let bank = build_filter_bank(g, p, 2).unwrap();
        // Frequency (2a, 0) at scale j+1 matches (a, 0) at scale j.
        for j in 0..4 {
            for a in 1..60 {
                let hi = bank.psi1(j + 1).unwrap()[g.index(&[2 * a, 0])];
                let lo = bank.psi1(j).unwrap()[g.index(&[a, 0])];
                assert!((hi - lo).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn annulus_support() {
        let p = FilterProfile::default();
        for r in [0.0, 0.1, 0.5 * 0.4, 2.0 * 0.4, 3.0] {
            assert_eq!(p.annulus(0, r), 0.0);
        }
        assert!(p.annulus(0, 0.4) > 0.0);
    }

    #[test]
    fn profile_errors() {
        let g = make_grid(1, 1, 6).unwrap();
        let bad = FilterProfile {
            inner_radius: 2.0,
            outer_radius: 1.0,
            ..FilterProfile::default()
        };
        assert!(matches!(build_filter_bank(g, bad, 2), Err(FlagError::Config(_))));
        let g3 = make_grid(1, 1, 3).unwrap();
        assert!(matches!(
            build_filter_bank(g3, FilterProfile::default(), 3),
            Err(FlagError::Resolution(_))
        ));
        let bank = build_filter_bank(g, FilterProfile::default(), 2).unwrap();
        assert!(matches!(bank.lift(9, 0), Err(FlagError::Range(_))));
    }

    #[test]
    fn lift_factorizes() {
        let g = make_grid(1, 1, 6).unwrap();
        let bank = build_filter_bank(g, FilterProfile::default(), 2).unwrap();
        let (j0, j1) = bank.j_range();
        let mut total = vec![0.0; g.len()];
        for (j, k) in bank.scales() {
            let l = bank.lift(j, k).unwrap();
            for (i, v) in l.iter().enumerate() {
                total[i] += v * v;
                if i % g.side() == 0 {
                    assert_eq!(*v, 0.0);
                }
            }
        }
        for (i, t) in total.iter().enumerate() {
            let s1: f64 = (j0..=j1).map(|j| bank.psi1(j).unwrap()[i].powi(2)).sum();
            let s2: f64 = (j0..=j1).map(|k| bank.psi2(k).unwrap()[i % g.side()].powi(2)).sum();
            assert!((t - s1 * s2).abs() < 1e-14);
        }
    }

    #[test]
    fn annulus_exact_orthogonality() {
        let g = make_grid(1, 1, 7).unwrap();
        let bank = build_filter_bank(g, FilterProfile::default(), 2).unwrap();
        assert!(bank.cross_correlation1(0, 2).unwrap() == 0.0);
        assert!(bank.cross_correlation1(1, 4).unwrap() == 0.0);
        assert!(bank.cross_correlation1(1, 2).unwrap() > 0.0);
        assert_eq!(bank.cross_correlation_flag((1, 1), (3, 1)).unwrap(), 0.0);
        assert_eq!(bank.cross_correlation_flag((1, 1), (1, 3)).unwrap(), 0.0);
        assert_eq!(bank.decay_rate1().unwrap(), None);
    }

    #[test]
    fn compact_bank_properties() {
        let g = make_grid(1, 1, 7).unwrap();
        let bank = build_compact_bank(g, 1, 2).unwrap();
        assert_eq!(bank.moment_order(), MomentOrder::Finite(1));
        let side = g.side();
        for j in 0..=bank.j_range().1 {
            let s1 = bank.spatial_psi1(j).unwrap();
            let s2 = bank.spatial_psi2(j).unwrap();
            assert!(max_moment(&s1, side, 2, 1) < 1e-8);
            assert!(max_moment(&s2, side, 1, 1) < 1e-8);
            let radius = (side >> (j + 1)) as f64;
            let radii = spatial_radii(side, 2);
            for (v, r) in s1.iter().zip(&radii) {
                if *r >= radius {
                    assert_eq!(*v, 0.0);
                }
            }
            // Reflection invariance.
            for i in 0..g.len() {
                let c = g.coords(i);
                let refl = g.index(&[(side - c[0]) % side, c[1]]);
                let swap = g.index(&[c[1], c[0]]);
                assert!((s1[i] - s1[refl]).abs() <= 1e-12 * s1[i].abs().max(1.0));
                assert!((s1[i] - s1[swap]).abs() <= 1e-12 * s1[i].abs().max(1.0));
            }
        }
        assert!(bank.residuals().partition_residual1 < 1e-12);
        assert!(bank.residuals().partition_residual < 1e-12);
        let rate = bank.decay_rate1().unwrap().expect("compact filters overlap");
        assert!(rate > 1.0, "rate {rate}");
    }

    #[test]
    fn compact_higher_moments() {
        let g = make_grid(1, 1, 7).unwrap();
        let bank = build_compact_bank(g, 3, 3).unwrap();
        assert_eq!(bank.moment_order(), MomentOrder::Finite(3));
        for j in 0..=bank.j_range().1 {
            assert!(max_moment(&bank.spatial_psi2(j).unwrap(), g.side(), 1, 3) < 1e-8);
        }
        let g5 = make_grid(1, 1, 5).unwrap();
        assert!(matches!(build_compact_bank(g5, 5, 1), Err(FlagError::Resolution(_))));
    }

    #[test]
    fn spatial_matches_trig_eval() {
        let g = make_grid(1, 1, 5).unwrap();
        let bank = build_filter_bank(g, FilterProfile::default(), 2).unwrap();
        let s = bank.spatial_psi1(1).unwrap();
        for i in [0, 3, 17, 200] {
            let x: Vec<f64> = g.coords(i).iter().map(|&c| c as f64 * g.spacing()).collect();
            assert!((bank.psi1_at(1, &x).unwrap() - s[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn export_manifest() {
        let g = make_grid(1, 1, 4).unwrap();
        let bank = build_filter_bank(
            g,
            FilterProfile {
                base_frequency: 1.0,
                ..Default::default()
            },
            1,
        )
        .unwrap();
        let mut buf = Vec::new();
        let man = bank.export(&mut buf).unwrap();
        assert_eq!(man.entries.len(), 2 * 3 + 3);
        let last = man.entries.last().unwrap();
        assert_eq!((last.offset + last.bytes) as usize, buf.len());
        let e = &man.entries[3];
        assert_eq!(e.factor, "psi2");
        let block = crate::grid::read_block(&mut &buf[e.offset as usize..]).unwrap();
        assert_eq!(block.values.len(), 16);
    }
}
