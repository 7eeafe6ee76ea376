//! Build the default frequency-annulus bank and the compact spatial bank,
//! then print their partition residuals and scale ranges.

use flaglp::filters::{build_compact_bank, build_filter_bank};
use flaglp::grid::make_grid;
use flaglp::FilterProfile;

fn main() -> flaglp::Result<()> {
    let grid = make_grid(1, 1, 7)?;
    let annulus = build_filter_bank(grid, FilterProfile::default(), 2)?;
    let compact = build_compact_bank(grid, 1, 4)?;
    for bank in [&annulus, &compact] {
        let r = bank.residuals();
        println!("{}", bank.id());
        println!("  j range {:?}, k range {:?}", bank.j_range(), bank.k_range());
        println!(
            "  active scales {}",
            bank.scales().iter().filter(|&&(j, k)| bank.is_active(j, k)).count()
        );
        println!(
            "  partition residuals {:.2e} {:.2e} {:.2e}",
            r.partition_residual1, r.partition_residual2, r.partition_residual
        );
        println!(
            "  calderon residuals {:.2e} {:.2e}",
            r.calderon_residual1, r.calderon_residual2
        );
    }
    let dir = std::env::temp_dir().join("flaglp-filter-bank");
    let manifest = annulus.export_to_dir(&dir)?;
    println!("exported to {} ({} entries)", dir.display(), manifest.entries.len());
    Ok(())
}
