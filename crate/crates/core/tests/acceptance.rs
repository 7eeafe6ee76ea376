//! Acceptance checks, one line per criterion. Exits nonzero if any fails.

mod common;

use std::time::Instant;

use flaglp::carleson::{cp_norm, duality_pair, generate_candidates, sp_norm};
use flaglp::corpus::{gen_corpus, generate, CorpusTag};
use flaglp::czd::{alpha_sweep, cz_decompose, cz_square_function};
use flaglp::filters::{build_compact_bank, build_filter_bank, FilterBank, FilterProfile};
use flaglp::grid::{make_grid, SampledFunction};
use flaglp::kernels::{
    builtin, validate_flag_kernel_with, validate_product_kernel_with, TruncatedOperator, ValidationOptions,
};
use flaglp::maximal::{hl_maximal, strong_maximal};
use flaglp::squarefuncs::pp_compare;
use flaglp::transform::analyze;
use flaglp::verify::{partition_checks, plancherel_defect, remainder_norms, reproduction_error};
use flaglp::{CoefficientField, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

type Outcome = Result<(bool, String)>;

fn annulus(level: u32, offset: u32) -> Result<FilterBank> {
    build_filter_bank(make_grid(1, 1, level)?, FilterProfile::default(), offset)
}

fn variant(level: u32, offset: u32) -> Result<FilterBank> {
    let profile = FilterProfile {
        inner_radius: 0.45,
        outer_radius: 2.2,
        smoothness: 0.7,
        ..FilterProfile::default()
    };
    build_filter_bank(make_grid(1, 1, level)?, profile, offset)
}

fn max(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn min(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(f64::INFINITY, f64::min)
}

fn partition() -> Outcome {
    let mut worst: f64 = 0.0;
    for level in [6, 7, 8] {
        let grid = make_grid(1, 1, level)?;
        for bank in [annulus(level, 2)?, build_compact_bank(grid, 1, 2)?] {
            let checks = partition_checks(&bank);
            worst = worst.max(max(checks.iter().filter(|c| c.name != "flag").map(|c| c.value)));
        }
    }
    Ok((
        worst <= 1e-10,
        format!("max factor partition residual {worst:.2e} (limit 1e-10)"),
    ))
}

fn plancherel() -> Outcome {
    let bank = annulus(8, 2)?;
    let defects = (0..20)
        .map(|s| plancherel_defect(&common::random_function(bank.grid(), 100 + s), &bank))
        .collect::<Result<Vec<_>>>()?;
    let worst = max(defects);
    Ok((
        worst <= 1e-9,
        format!("20 fields at L=8, max relative defect {worst:.2e} (limit 1e-9)"),
    ))
}

fn remainder_decay() -> Outcome {
    let norms = remainder_norms(&|n| annulus(8, n))?;
    let ratios: Vec<f64> = norms.windows(2).map(|w| w[0] / w[1]).collect();
    let ok = ratios.iter().all(|r| (1.5..=2.5).contains(r));
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", ");
    Ok((
        ok,
        format!(
            "|R| for N=1..4 at L=8: [{}], step ratios [{}]",
            fmt(&norms),
            fmt(&ratios)
        ),
    ))
}

fn reproducing() -> Outcome {
    let bank = annulus(7, 3)?;
    let corpus = gen_corpus(&bank, 20, 4)?;
    let errs = corpus
        .iter()
        .map(|it| reproduction_error(&it.function, &bank, 1e-8))
        .collect::<Result<Vec<_>>>()?;
    let worst = max(errs);
    Ok((
        worst <= 1e-7,
        format!("20 corpus items, L=7, N=3, max relative error {worst:.2e} (limit 1e-7)"),
    ))
}

fn plancherel_polya() -> Outcome {
    let ps = [0.8, 1.0, 2.0];
    let mut per_level = Vec::new();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for level in [7, 8] {
        let (a, b) = (annulus(level, 2)?, variant(level, 2)?);
        let corpus = gen_corpus(&a, 20, 3)?;
        let mut maxima = Vec::new();
        for p in ps {
            let mut m: f64 = 0.0;
            for it in &corpus {
                for (x, y) in [(&a, &b), (&b, &a)] {
                    let r = pp_compare(&it.function, x, y, p, 2)?.ratio;
                    lo = lo.min(r);
                    hi = hi.max(r);
                    m = m.max(r);
                }
            }
            maxima.push(m);
        }
        per_level.push(maxima);
    }
    let drift = max((0..ps.len()).map(|i| (per_level[1][i] / per_level[0][i] - 1.0).abs()));
    let ok = lo >= 1.0 && hi <= 20.0 && drift <= 0.25;
    Ok((
        ok,
        format!(
            "ratios in [{lo:.3}, {hi:.3}] (need [1, 20]), per-p max drift L7->L8 {:.1}% (limit 25%)",
            drift * 100.0
        ),
    ))
}

fn calderon_zygmund() -> Outcome {
    let grid = make_grid(1, 1, 7)?;
    let f = generate(CorpusTag::BandLimited, &annulus(7, 2)?, 5)?;
    let offset = 4;
    let bank = build_compact_bank(grid, 1, offset)?;
    let (_, s, _) = cz_square_function(&f, &bank, offset, 1e-12)?;
    let (mut add, mut viol, mut cg, mut cb) = (0.0f64, 0usize, Vec::new(), Vec::new());
    for alpha in alpha_sweep(&s, 8, 0.05, 0.95)? {
        let r = cz_decompose(&f, &bank, alpha, offset, 1.0, 2.0, 0.5)?.report;
        add = add.max(r.additivity_error);
        viol += r.support_violations;
        cg.push(r.fitted_c_g);
        cb.push(r.fitted_c_b);
    }
    let spread = |v: &[f64]| max(v.iter().copied()) / min(v.iter().copied());
    let (sg, sb) = (spread(&cg), spread(&cb));
    let ok = add <= 1e-9 && viol == 0 && sg <= 10.0 && sb <= 10.0;
    Ok((
        ok,
        format!("8 alphas: additivity {add:.1e}, support violations {viol}, C_g spread {sg:.2}x, C_b spread {sb:.2}x (limit 10x)"),
    ))
}

/// Declared duality constant for `p = 1`.
const DUALITY_C: f64 = 4.0;

fn duality() -> Outcome {
    let grid = make_grid(1, 1, 5)?;
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut s = CoefficientField::zeros(grid, 1, (0, 2), (0, 2))?;
        let mut t = s.clone();
        let entry = |rng: &mut ChaCha20Rng| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        for _ in 0..rng.random_range(1..=6) {
            let (j, k) = (rng.random_range(0..=2u32), rng.random_range(0..=2u32));
            let i = rng.random_range(0..s.slot(j, k).expect("slot").values.len());
            s.slot_values_mut(j, k).expect("slot")[i] = entry(&mut rng);
            t.slot_values_mut(j, k).expect("slot")[i] = entry(&mut rng);
            let j2 = rng.random_range(0..=2u32);
            let i2 = rng.random_range(0..t.slot(j2, k).expect("slot").values.len());
            t.slot_values_mut(j2, k).expect("slot")[i2] = entry(&mut rng);
        }
        let pair = duality_pair(&s, &t)?.norm();
        let bound = sp_norm(&s, 1.0)? * cp_norm(&t, 1.0, &generate_candidates(&t, 64)?)?;
        worst = worst.max(pair / bound);
    }
    let tiny = make_grid(1, 1, 3)?;
    let template = CoefficientField::zeros(tiny, 1, (0, 1), (0, 1))?;
    let (mut checked, mut mismatches) = (0, 0);
    for slot in template.slots() {
        for i in 0..slot.values.len() {
            let mut t = template.clone();
            t.slot_values_mut(slot.j, slot.k).expect("slot")[i] = Complex64::new(1.0, 0.0);
            for p in [1.0, 0.5] {
                checked += 1;
                if cp_norm(&t, p, &generate_candidates(&t, 16)?)? != common::exhaustive_cp(&t, p) {
                    mismatches += 1;
                }
            }
        }
    }
    let ok = worst <= DUALITY_C && mismatches == 0;
    Ok((
        ok,
        format!(
            "50 pairs: max |<s,t>|/(|s|_s1 |t|_c1) = {worst:.3} (C = {DUALITY_C}); 8x8 oracle {mismatches}/{checked} one-hot mismatches"
        ),
    ))
}

fn kernel_contrast() -> Outcome {
    let (k1, k2) = (builtin("k1-product")?, builtin("k2-flag")?);
    let mut lines = Vec::new();
    let mut ok = true;
    for depth in [3, 4] {
        let opts = ValidationOptions {
            depth,
            ..ValidationOptions::default()
        };
        let flag2 = validate_flag_kernel_with(&k2, &opts)?;
        let flag1 = validate_flag_kernel_with(&k1, &opts)?;
        let prod1 = validate_product_kernel_with(&k1, &opts)?;
        ok &= flag2.passes && !flag1.passes && flag1.max_ratio >= 4.0 && prod1.passes;
        lines.push(format!(
            "D={depth}: K2 flag {} (max ratio {:.3}), K1 flag {} (max ratio {:.1}), K1 product {}",
            if flag2.passes { "pass" } else { "fail" },
            flag2.max_ratio,
            if flag1.passes { "pass" } else { "fail" },
            flag1.max_ratio,
            if prod1.passes { "pass" } else { "fail" },
        ));
    }
    Ok((ok, lines.join("; ")))
}

fn flag_convolution() -> Outcome {
    let k = builtin("k2-cancellative")?;
    let mut norms = Vec::new();
    for level in [7, 8] {
        let grid = make_grid(1, 1, level)?;
        for mult in [4.0, 2.0, 1.0] {
            norms.push(TruncatedOperator::new(grid, &k, mult * grid.spacing())?.norm());
        }
    }
    let spread = max(norms.iter().copied()) / min(norms.iter().copied()) - 1.0;
    let list = norms.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", ");
    Ok((
        spread <= 0.25,
        format!(
            "norms (L=7 eps=4h,2h,h; L=8 same) [{list}], spread {:.1}% (limit 25%)",
            spread * 100.0
        ),
    ))
}

fn oracles() -> Outcome {
    let grid = make_grid(1, 1, 3)?;
    let bank = annulus(3, 1)?;
    let f = common::random_function(grid, 9);
    let fast = analyze(&f, &bank, 1)?;
    let dense = common::dense_analysis(&f, &bank, 1);
    let analysis = max(fast.slots().iter().zip(dense.slots()).flat_map(|(a, b)| {
        a.values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y).norm())
            .collect::<Vec<_>>()
    }));
    let lift = max(bank.scales().into_iter().map(|(j, k)| {
        let a = bank.spatial_lift(j, k).expect("scale in range");
        let b = common::dense_lift(&bank, j, k);
        max(a.iter().zip(&b).map(|(x, y)| (x - y).abs()))
    }));
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let ints: Vec<f64> = (0..grid.len())
        .map(|_| f64::from(rng.random_range(0..100u32)))
        .collect();
    let g = SampledFunction::from_real(grid, &ints)?;
    let strong_ok = strong_maximal(&g).abs() == common::brute_maximal(&g, false);
    let hl_ok = hl_maximal(&g).abs() == common::brute_maximal(&g, true);
    let mut s = CoefficientField::zeros(grid, 1, (0, 1), (0, 1))?;
    for _ in 0..12 {
        let (j, k) = (rng.random_range(0..=1u32), rng.random_range(0..=1u32));
        let i = rng.random_range(0..s.slot(j, k).expect("slot").values.len());
        s.slot_values_mut(j, k).expect("slot")[i] =
            Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
    }
    let sp = max([0.5, 1.0, 2.0].into_iter().map(|p| {
        let (a, b) = (sp_norm(&s, p).expect("valid exponent"), common::dense_sp_norm(&s, p));
        (a - b).abs() / b
    }));
    let ok = analysis <= 1e-9 && lift <= 1e-9 && strong_ok && hl_ok && sp <= 1e-10;
    Ok((
        ok,
        format!(
            "8x8: analysis {analysis:.1e}, lift {lift:.1e}, strong maximal {}, dyadic HL {}, sp_norm rel {sp:.1e}",
            if strong_ok { "exact" } else { "MISMATCH" },
            if hl_ok { "exact" } else { "MISMATCH" },
        ),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("partition of unity", partition),
        ("square-function Plancherel identity", plancherel),
        ("remainder decay in N", remainder_decay),
        ("discrete reproducing round trip", reproducing),
        ("sup/inf sampling stability", plancherel_polya),
        ("Calderon-Zygmund splitting", calderon_zygmund),
        ("sequence-space duality", duality),
        ("kernel certification contrast", kernel_contrast),
        ("truncated flag convolution", flag_convolution),
        ("brute-force oracles", oracles),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = match check() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} [{name}] {detail} ({:.1}s)",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
