//! Truncated flag convolution: operator norms as the truncation shrinks,
//! the projection of a lifted product kernel, and the maximal majorant.

use flaglp::corpus::{generate, CorpusTag};
use flaglp::filters::build_filter_bank;
use flaglp::grid::make_grid;
use flaglp::kernels::{builtin, majorant_check, project_to_flag, TruncatedOperator};
use flaglp::FilterProfile;

fn main() -> flaglp::Result<()> {
    let k = builtin("k2-cancellative")?;
    for level in [6, 7] {
        let grid = make_grid(1, 1, level)?;
        let norms: Vec<String> = [1.0, 2.0, 4.0]
            .iter()
            .map(|m| TruncatedOperator::new(grid, &k, m * grid.spacing()).map(|op| format!("{:.3}", op.norm())))
            .collect::<flaglp::Result<_>>()?;
        println!("L={level} norms at eps = 1, 2, 4 cells: {}", norms.join(" "));
    }

    let projected = project_to_flag(&builtin("lifted-product")?)?;
    println!("projected kernel at (1,1): {:.6}", projected.eval(&[1.0, 1.0])?);

    let grid = make_grid(1, 1, 6)?;
    let bank = build_filter_bank(grid, FilterProfile::default(), 2)?;
    let f = generate(CorpusTag::Bump, &bank, 4)?;
    let op = TruncatedOperator::new(grid, &k, 2.0 * grid.spacing())?;
    let tf = op.apply(&f)?;
    println!(
        "|Tf|_2 / |f|_2 = {:.4} (norm {:.4}, power {:.4})",
        tf.l2_norm() / f.l2_norm(),
        op.norm(),
        op.power_norm(40, 1)?
    );
    let m = majorant_check(&f, &op, &bank)?;
    println!("majorant constant {:.3}", m.fitted_c);
    Ok(())
}
