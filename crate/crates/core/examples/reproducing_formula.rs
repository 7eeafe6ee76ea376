//! Analyze a random function, invert the discrete frame operator by the
//! Neumann series, and resynthesize from the coefficients.

use flaglp::corpus::{generate, CorpusTag};
use flaglp::filters::build_filter_bank;
use flaglp::grid::make_grid;
use flaglp::transform::{
    analyze, neumann_inverse, remainder_norm_estimate, synthesize_continuous, synthesize_discrete,
};
use flaglp::FilterProfile;

fn main() -> flaglp::Result<()> {
    let grid = make_grid(1, 1, 7)?;
    let offset = 2;
    let bank = build_filter_bank(grid, FilterProfile::default(), offset)?;
    let f = generate(CorpusTag::BandLimited, &bank, 3)?;

    let continuous = synthesize_continuous(&f, &bank)?;
    println!("continuous reproduction error {:.2e}", continuous.sub(&f)?.l2_norm());

    println!("|R| estimate {:.3}", remainder_norm_estimate(&bank, offset, 30, 17)?);
    let h = neumann_inverse(&f, &bank, offset, 1e-10)?;
    println!("neumann iterations {}, probe {:.3}", h.iterations, h.contraction_probe);

    let coeffs = analyze(&h.function, &bank, offset)?;
    let back = synthesize_discrete(&coeffs, &bank)?;
    println!("coefficients {}", coeffs.entry_count());
    println!(
        "discrete reproduction error {:.2e}",
        back.sub(&f)?.l2_norm() / f.l2_norm()
    );
    Ok(())
}
