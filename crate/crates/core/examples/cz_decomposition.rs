//! Calderon-Zygmund decomposition across a sweep of heights, with fitted
//! constants for the good and bad parts.

use flaglp::corpus::{generate, CorpusTag};
use flaglp::czd::{alpha_sweep, cz_decompose, cz_square_function};
use flaglp::filters::{build_compact_bank, build_filter_bank};
use flaglp::grid::make_grid;
use flaglp::FilterProfile;

fn main() -> flaglp::Result<()> {
    let grid = make_grid(1, 1, 7)?;
    let offset = 4;
    let bank = build_compact_bank(grid, 1, offset)?;
    let f = generate(
        CorpusTag::BandLimited,
        &build_filter_bank(grid, FilterProfile::default(), 2)?,
        5,
    )?;
    let (_, s, iterations) = cz_square_function(&f, &bank, offset, 1e-12)?;
    println!("square function after {iterations} Neumann steps");
    println!(
        "{:>10} {:>10} {:>10} {:>8} {:>8} {:>10}",
        "alpha", "|g|_2", "|b|_0.5", "C_g", "C_b", "g+b-f"
    );
    for alpha in alpha_sweep(&s, 6, 0.05, 0.95)? {
        let r = cz_decompose(&f, &bank, alpha, offset, 1.0, 2.0, 0.5)?.report;
        println!(
            "{:>10.4} {:>10.4} {:>10.4} {:>8.3} {:>8.3} {:>10.1e}",
            r.alpha, r.g_norm, r.b_norm, r.fitted_c_g, r.fitted_c_b, r.additivity_error
        );
    }
    Ok(())
}
