//! Carleson sequence norms over generated candidate sets, the duality bound
//! against the s^p norm, and the CMO norm of a function.

use flaglp::carleson::{cmo_norm, cp_norm_detailed, duality_pair, generate_candidates, sp_norm};
use flaglp::corpus::{generate, CorpusTag};
use flaglp::filters::build_filter_bank;
use flaglp::grid::make_grid;
use flaglp::transform::analyze;
use flaglp::FilterProfile;

fn main() -> flaglp::Result<()> {
    let grid = make_grid(1, 1, 5)?;
    let bank = build_filter_bank(grid, FilterProfile::default(), 1)?;
    let s = analyze(&generate(CorpusTag::Bump, &bank, 1)?, &bank, 1)?;
    let f = generate(CorpusTag::Indicator, &bank, 2)?;
    let t = analyze(&f, &bank, 1)?;
    let candidates = generate_candidates(&t, 64)?;
    println!("{} candidate sets", candidates.len());
    for p in [1.0, 0.5] {
        let c = cp_norm_detailed(&t, p, &candidates)?;
        let sp = sp_norm(&s, p)?;
        let pair = duality_pair(&s, &t)?.norm();
        println!(
            "p={p}: |<s,t>| {pair:.4} <= |s|_sp {sp:.4} * |t|_cp {:.4} (best set {}, measure {:.4})",
            c.value,
            c.best,
            candidates[c.best].measure()
        );
        println!("  cmo norm {:.4}", cmo_norm(&f, &bank, p, 1, &candidates)?);
    }
    Ok(())
}
