//! Size and cancellation certificates for built-in kernels and a parsed
//! expression, in flag and product geometry.

use flaglp::kernels::{
    builtin, validate_flag_kernel_with, validate_product_kernel_with, KernelSpec, ValidationOptions,
};

fn main() -> flaglp::Result<()> {
    let opts = ValidationOptions {
        depth: 3,
        ..ValidationOptions::default()
    };
    let kernels = [
        builtin("k2-flag")?,
        builtin("k1-product")?,
        KernelSpec::from_expression("1/(x*(x+i*y))", None)?,
    ];
    for k in &kernels {
        let flag = validate_flag_kernel_with(k, &opts)?;
        let product = validate_product_kernel_with(k, &opts)?;
        println!("{} ({})", k.name(), k.geometry().as_str());
        println!("  flag    passes={} max ratio {:.3}", flag.passes, flag.max_ratio);
        println!("  product passes={} max ratio {:.3}", product.passes, product.max_ratio);
        for fit in flag.fits.iter().filter(|f| !f.stable) {
            println!(
                "  unstable {} {:?}: {:.3e} -> {:.3e}",
                fit.condition, fit.order, fit.coarse, fit.fine
            );
        }
    }
    Ok(())
}
