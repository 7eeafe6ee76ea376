//! Seeded test corpora: band-limited random fields, indicators of dyadic
//! rectangle unions, single-atom functions and smooth bumps.

use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{FlagError, Result};
use crate::fft::LatticeFft;
use crate::filters::FilterBank;
use crate::grid::{Grid, RectShape, SampledFunction};
use crate::kernels::standard_bump;
use crate::transform::{synthesize_discrete, CoefficientField};

pub const RNG_ALGORITHM: &str = "ChaCha20 (rand_chacha, seed_from_u64)";

/// Low-pass response below which a frequency counts as outside the low-pass band.
const LOW_PASS_FLOOR: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusTag {
    BandLimited,
    Indicator,
    SingleAtom,
    Bump,
}

impl CorpusTag {
    pub const ALL: [CorpusTag; 4] = [
        CorpusTag::BandLimited,
        CorpusTag::Indicator,
        CorpusTag::SingleAtom,
        CorpusTag::Bump,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CorpusTag::BandLimited => "band-limited",
            CorpusTag::Indicator => "indicator",
            CorpusTag::SingleAtom => "single-atom",
            CorpusTag::Bump => "bump",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorpusItem {
    pub tag: CorpusTag,
    pub seed: u64,
    pub function: SampledFunction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ManifestEntry {
    pub index: usize,
    pub tag: CorpusTag,
    pub seed: u64,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CorpusManifest {
    pub rng: String,
    pub seed: u64,
    pub count: usize,
    pub n: usize,
    pub m: usize,
    pub level: u32,
    pub bank: String,
    pub items: Vec<ManifestEntry>,
}

/// `count` items cycling through the tags, each normalized to unit L2 norm.
pub fn gen_corpus(bank: &FilterBank, count: usize, seed: u64) -> Result<Vec<CorpusItem>> {
    let mut master = ChaCha20Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let tag = CorpusTag::ALL[i % CorpusTag::ALL.len()];
            let item_seed = master.next_u64();
            let function = generate(tag, bank, item_seed)?;
            Ok(CorpusItem {
                tag,
                seed: item_seed,
                function,
            })
        })
        .collect()
}

/// Only items with the given tag.
pub fn gen_tagged(bank: &FilterBank, tag: CorpusTag, count: usize, seed: u64) -> Result<Vec<SampledFunction>> {
    let mut master = ChaCha20Rng::seed_from_u64(seed);
    (0..count).map(|_| generate(tag, bank, master.next_u64())).collect()
}

pub fn generate(tag: CorpusTag, bank: &FilterBank, seed: u64) -> Result<SampledFunction> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let f = match tag {
        CorpusTag::BandLimited => band_limited(bank, &mut rng)?,
        CorpusTag::Indicator => indicator(bank, &mut rng)?,
        CorpusTag::SingleAtom => single_atom(bank, &mut rng)?,
        CorpusTag::Bump => bump(bank.grid(), &mut rng)?,
    };
    let norm = f.l2_norm();
    if norm == 0.0 {
        return Err(FlagError::Config(format!(
            "generated {} item is identically zero",
            tag.as_str()
        )));
    }
    Ok(f.scale(Complex64::new(1.0 / norm, 0.0)))
}

/// Real Gaussian field supported where the low-pass response vanishes, with
/// iid coefficients inside each dyadic annulus and equal energy per annulus.
fn band_limited(bank: &FilterBank, rng: &mut ChaCha20Rng) -> Result<SampledFunction> {
    let grid = bank.grid();
    let low = bank.low_pass();
    let annulus: Vec<Option<usize>> = (0..grid.len())
        .map(|i| {
            if low[i] > LOW_PASS_FLOOR {
                return None;
            }
            let r2: i64 = grid.coords(i).iter().map(|&c| grid.frequency(c).pow(2)).sum();
            Some((r2 as f64).sqrt().log2().floor().max(0.0) as usize)
        })
        .collect();
    let bands = annulus.iter().flatten().max().map_or(0, |&a| a + 1);
    if bands == 0 {
        return Err(FlagError::Config(format!(
            "bank {} leaves no frequencies outside its low-pass band",
            bank.id()
        )));
    }
    let mut sizes = vec![0usize; bands];
    for a in annulus.iter().flatten() {
        sizes[*a] += 1;
    }
    let mut spec: Vec<Complex64> = annulus
        .iter()
        .map(|a| match a {
            Some(a) => {
                let s = 1.0 / (sizes[*a] as f64).sqrt();
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(re * s, im * s)
            }
            None => Complex64::new(0.0, 0.0),
        })
        .collect();
    LatticeFft::for_grid(grid).inverse(&mut spec);
    SampledFunction::new(grid, spec.into_iter().map(|v| Complex64::new(v.re, 0.0)).collect())
}

/// A random scale whose lifted filter is not identically zero.
fn random_shape(bank: &FilterBank, rng: &mut ChaCha20Rng) -> Result<(u32, u32, RectShape)> {
    let scales: Vec<(u32, u32)> = bank
        .scales()
        .into_iter()
        .filter(|&(j, k)| bank.is_active(j, k))
        .collect();
    if scales.is_empty() {
        return Err(FlagError::Config(format!("bank {} has no active scales", bank.id())));
    }
    let (j, k) = scales[rng.random_range(0..scales.len())];
    Ok((j, k, RectShape::new(bank.grid(), j, k, bank.offset())?))
}

fn indicator(bank: &FilterBank, rng: &mut ChaCha20Rng) -> Result<SampledFunction> {
    let grid = bank.grid();
    let mut mask = vec![false; grid.len()];
    for _ in 0..rng.random_range(1..=4) {
        let (_, _, shape) = random_shape(bank, rng)?;
        let pick = rng.random_range(0..shape.len());
        shape.for_each_cell(grid, |g, a| {
            if a == pick {
                mask[g] = true;
            }
        });
    }
    SampledFunction::from_real(grid, &mask.iter().map(|&b| f64::from(u8::from(b))).collect::<Vec<_>>())
}

fn single_atom(bank: &FilterBank, rng: &mut ChaCha20Rng) -> Result<SampledFunction> {
    let mut coeffs = CoefficientField::for_bank(bank, bank.offset())?;
    let (j, k, shape) = random_shape(bank, rng)?;
    let pick = rng.random_range(0..shape.len());
    coeffs.slot_values_mut(j, k).expect("slot within bank range")[pick] = Complex64::new(1.0, 0.0);
    synthesize_discrete(&coeffs, bank)
}

fn bump(grid: Grid, rng: &mut ChaCha20Rng) -> Result<SampledFunction> {
    let center: Vec<f64> = (0..grid.dim()).map(|_| rng.random::<f64>()).collect();
    let radius = rng.random_range(0.08..0.3);
    SampledFunction::from_fn(grid, |x| {
        let r2: f64 = x
            .iter()
            .zip(&center)
            .map(|(a, c)| {
                let d = (a - c).rem_euclid(1.0);
                d.min(1.0 - d).powi(2)
            })
            .sum();
        Complex64::new(standard_bump(r2 / (radius * radius)), 0.0)
    })
}

/// Writes `item_NNN.bin` blocks and `manifest.json` into `dir`.
pub fn write_corpus(dir: &Path, bank: &FilterBank, seed: u64, items: &[CorpusItem]) -> Result<CorpusManifest> {
    std::fs::create_dir_all(dir)?;
    let grid = bank.grid();
    let mut entries = Vec::with_capacity(items.len());
    for (index, item) in items.iter().enumerate() {
        let file = format!("item_{index:03}.bin");
        std::fs::write(dir.join(&file), item.function.to_block_bytes())?;
        entries.push(ManifestEntry {
            index,
            tag: item.tag,
            seed: item.seed,
            file,
        });
    }
    let manifest = CorpusManifest {
        rng: RNG_ALGORITHM.to_string(),
        seed,
        count: items.len(),
        n: grid.n(),
        m: grid.m(),
        level: grid.level(),
        bank: bank.id(),
        items: entries,
    };
    std::fs::write(dir.join("manifest.json"), crate::report::to_json(&manifest)?)?;
    Ok(manifest)
}
