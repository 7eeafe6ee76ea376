//! Strong and Hardy-Littlewood maximal functions of an indicator, plus the
//! vector-valued inequality on a small family.

use flaglp::grid::{make_grid, SampledFunction};
use flaglp::maximal::{dilated_set, fs_vector_check, hl_maximal, strong_maximal};
use num_complex::Complex64;

fn main() -> flaglp::Result<()> {
    let grid = make_grid(1, 1, 6)?;
    let side = grid.side();
    let mask: Vec<bool> = (0..grid.len()).map(|i| i / side < 8 && i % side < 20).collect();
    let ind: Vec<f64> = mask.iter().map(|&b| f64::from(u8::from(b))).collect();
    let f = SampledFunction::from_real(grid, &ind)?;

    let ms = strong_maximal(&f);
    let mh = hl_maximal(&f);
    let vol = grid.cell_volume();
    println!("|E| = {:.4}", f.lp_norm(1.0)?);
    println!("|M_s 1_E|_2 = {:.4}, |M_hl 1_E|_2 = {:.4}", ms.l2_norm(), mh.l2_norm());
    let enlarged = dilated_set(grid, &mask, 0.5, true)?;
    println!(
        "|{{M_s 1_E >= 1/2}}| = {:.4}",
        enlarged.iter().filter(|&&b| b).count() as f64 * vol
    );

    let family: Vec<SampledFunction> = (0..4)
        .map(|s| {
            f.translate(&[8 * s, 3 * s])
                .map(|g| g.scale(Complex64::new(1.0 + s as f64, 0.0)))
        })
        .collect::<flaglp::Result<_>>()?;
    for (r, p) in [(2.0, 2.0), (2.0, 1.5), (1.5, 3.0)] {
        let rep = fs_vector_check(&family, r, p)?;
        println!("r={r} p={p}: ratio {:.3}", rep.ratio);
    }
    Ok(())
}
