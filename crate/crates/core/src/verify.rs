//! Self-checks runnable from the command line.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::corpus::gen_corpus;
use crate::error::{FlagError, Result};
use crate::filters::FilterBank;
use crate::grid::{l2_norm_slice, SampledFunction};
use crate::squarefuncs::g_flag;
use crate::transform::{
    analyze, low_pass_channel, neumann_inverse, random_field, remainder_norm_estimate, synthesize_discrete,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Partition,
    Plancherel,
    Reproducing,
    Remainder,
}

impl Suite {
    pub const ALL: [Suite; 4] = [
        Suite::Partition,
        Suite::Plancherel,
        Suite::Reproducing,
        Suite::Remainder,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Suite::Partition => "partition",
            Suite::Plancherel => "plancherel",
            Suite::Reproducing => "reproducing",
            Suite::Remainder => "remainder",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = FlagError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| FlagError::Config(format!("unknown verify suite '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Acceptable closed interval for `value`.
    pub lower: f64,
    pub upper: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, lower: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            value,
            lower,
            upper,
            passed: value >= lower && value <= upper,
        }
    }

    fn at_most(name: impl Into<String>, value: f64, upper: f64) -> Self {
        Self::new(name, value, f64::NEG_INFINITY, upper)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerifyReport {
    pub suite: Suite,
    pub level: u32,
    /// Largest residual for suites that measure one.
    pub max_residual: Option<f64>,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    fn new(suite: Suite, level: u32, checks: Vec<Check>, residual: bool) -> Self {
        let max_residual = residual.then(|| checks.iter().map(|c| c.value).fold(0.0, f64::max));
        Self {
            suite,
            level,
            max_residual,
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }
}

pub struct VerifyOptions {
    pub seed: u64,
    pub samples: usize,
    pub neumann_tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            samples: 20,
            neumann_tol: 1e-8,
        }
    }
}

/// Runs one suite. `make_bank(N)` builds the bank for sampling offset `N`;
/// the suites that do not vary `N` use `base_offset`.
pub fn run_suite(
    suite: Suite,
    make_bank: &dyn Fn(u32) -> Result<FilterBank>,
    base_offset: u32,
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    let bank = make_bank(base_offset)?;
    let level = bank.grid().level();
    Ok(match suite {
        Suite::Partition => VerifyReport::new(suite, level, partition_checks(&bank), true),
        Suite::Plancherel => VerifyReport::new(suite, level, plancherel_checks(&bank, opts)?, true),
        Suite::Reproducing => VerifyReport::new(suite, level, reproducing_checks(&bank, opts)?, true),
        Suite::Remainder => VerifyReport::new(suite, level, remainder_checks(make_bank)?, false),
    })
}

/// `max |sum_j |psi_j|^2 + |low|^2 - 1|` per factor and for the flag partition.
pub fn partition_checks(bank: &FilterBank) -> Vec<Check> {
    let factor = |psi: Vec<&[f64]>, low: &[f64]| {
        let mut sum: Vec<f64> = low.iter().map(|v| v * v).collect();
        for p in psi {
            for (s, v) in sum.iter_mut().zip(p) {
                *s += v * v;
            }
        }
        sum.iter().fold(0.0f64, |a, s| a.max((s - 1.0).abs()))
    };
    let (j0, j1) = bank.j_range();
    let (k0, k1) = bank.k_range();
    let psi1 = (j0..=j1).map(|j| bank.psi1(j).expect("scale in range")).collect();
    let psi2 = (k0..=k1).map(|k| bank.psi2(k).expect("scale in range")).collect();
    let r1 = factor(psi1, bank.low_pass1());
    let r2 = factor(psi2, bank.low_pass2());
    vec![
        Check::at_most("factor1", r1, 1e-10),
        Check::at_most("factor2", r2, 1e-10),
        Check::at_most("flag", bank.residuals().partition_residual, 1e-10),
    ]
}

/// Relative defect of `|g_F(f)|^2 + |low * f|^2 = |f|^2` on random fields.
pub fn plancherel_defect(f: &SampledFunction, bank: &FilterBank) -> Result<f64> {
    let vol = f.grid().cell_volume();
    let g = g_flag(f, bank)?;
    let low = low_pass_channel(f, bank)?;
    let sq = |v: &[Complex64]| l2_norm_slice(v, vol).powi(2);
    let total = sq(f.values());
    Ok((sq(g.values()) + sq(&low) - total).abs() / total)
}

fn plancherel_checks(bank: &FilterBank, opts: &VerifyOptions) -> Result<Vec<Check>> {
    (0..opts.samples)
        .map(|i| {
            let f = random_field(bank.grid(), opts.seed.wrapping_add(i as u64));
            Ok(Check::at_most(format!("field-{i}"), plancherel_defect(&f, bank)?, 1e-9))
        })
        .collect()
}

/// Relative L2 error of `synthesize(analyze(T_N^{-1} f))`.
pub fn reproduction_error(f: &SampledFunction, bank: &FilterBank, tol: f64) -> Result<f64> {
    let h = neumann_inverse(f, bank, bank.offset(), tol)?.function;
    let back = synthesize_discrete(&analyze(&h, bank, bank.offset())?, bank)?;
    Ok(back.sub(f)?.l2_norm() / f.l2_norm())
}

fn reproducing_checks(bank: &FilterBank, opts: &VerifyOptions) -> Result<Vec<Check>> {
    gen_corpus(bank, opts.samples, opts.seed)?
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let err = reproduction_error(&item.function, bank, opts.neumann_tol)?;
            Ok(Check::at_most(format!("{}-{i}", item.tag.as_str()), err, 1e-7))
        })
        .collect()
}

/// Power-iteration estimates of `|R|` for `N = 1..=4`.
pub fn remainder_norms(make_bank: &dyn Fn(u32) -> Result<FilterBank>) -> Result<Vec<f64>> {
    (1..=4u32)
        .map(|n| remainder_norm_estimate(&make_bank(n)?, n, 30, 17))
        .collect()
}

fn remainder_checks(make_bank: &dyn Fn(u32) -> Result<FilterBank>) -> Result<Vec<Check>> {
    let norms = remainder_norms(make_bank)?;
    let mut checks: Vec<Check> = norms
        .iter()
        .enumerate()
        .map(|(i, &v)| Check::new(format!("norm-N{}", i + 1), v, 0.0, f64::INFINITY))
        .collect();
    for (i, w) in norms.windows(2).enumerate() {
        checks.push(Check::new(
            format!("ratio-N{}-N{}", i + 1, i + 2),
            w[0] / w[1],
            1.5,
            2.5,
        ));
    }
    Ok(checks)
}
