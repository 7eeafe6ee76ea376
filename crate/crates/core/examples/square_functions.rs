//! Continuous and discrete square functions, the Hardy-type norm for several
//! exponents, and the sup/inf comparison between two banks.

use flaglp::corpus::{gen_corpus, CorpusTag};
use flaglp::filters::build_filter_bank;
use flaglp::grid::{lp_norm_real, make_grid};
use flaglp::squarefuncs::{discrete_square_norm, g_flag, hardy_norm, pp_compare};
use flaglp::FilterProfile;

fn main() -> flaglp::Result<()> {
    let grid = make_grid(1, 1, 7)?;
    let a = build_filter_bank(grid, FilterProfile::default(), 2)?;
    let b = build_filter_bank(
        grid,
        FilterProfile {
            inner_radius: 0.45,
            outer_radius: 2.2,
            smoothness: 0.7,
            ..FilterProfile::default()
        },
        2,
    )?;
    for item in gen_corpus(&a, 4, 1)? {
        let f = &item.function;
        let g = g_flag(f, &a)?.abs();
        println!(
            "{:<13} |f|_2 {:.4}  |g f|_2 {:.4}",
            CorpusTag::as_str(&item.tag),
            f.l2_norm(),
            lp_norm_real(&g, grid.cell_volume(), 2.0)?
        );
        for p in [0.5, 0.8, 1.0] {
            let h = hardy_norm(f, &a, p, 2)?;
            let c = lp_norm_real(&g, grid.cell_volume(), p)?;
            println!("  p={p:<4} discrete H^p {h:.4}  continuous {c:.4}");
        }
        println!("  p=3    discrete {:.4}", discrete_square_norm(f, &a, 3.0, 2)?);
        for p in [0.8, 2.0] {
            let (ab, ba) = (pp_compare(f, &a, &b, p, 2)?, pp_compare(f, &b, &a, p, 2)?);
            println!("  p={p:<4} sup/inf {:.3} / {:.3}", ab.ratio, ba.ratio);
        }
    }
    Ok(())
}
