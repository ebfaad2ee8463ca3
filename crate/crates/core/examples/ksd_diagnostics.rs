//! Kernel Stein discrepancy of exact samples versus shifted ones: the
//! V-statistic is biased upward by O(1/N), the U-statistic is not.
//!
//! cargo run --release --example ksd_diagnostics

use svgd::diagnostics::{ksd_squared, KsdMode};
use svgd::kernels::Kernel;
use svgd::rng;
use svgd::targets::GaussianTarget;

fn main() -> svgd::Result<()> {
    let target = GaussianTarget::standard(2)?;
    let kernel = Kernel::imq(1.0, -0.5, 2)?;
    println!(
        "{:>6} {:>12} {:>12} {:>12}",
        "N", "V exact", "U exact", "V shifted"
    );
    for n in [10, 40, 160, 640] {
        let mut r = rng::stream(1, n as u64);
        let exact = rng::gaussian_ensemble(&mut r, n, &[0.0, 0.0], 1.0)?;
        let shifted = exact.translated(&[1.0, 0.0])?;
        println!(
            "{n:>6} {:>12.6} {:>12.6} {:>12.6}",
            ksd_squared(&exact, &target, &kernel, KsdMode::V)?,
            ksd_squared(&exact, &target, &kernel, KsdMode::U)?,
            ksd_squared(&shifted, &target, &kernel, KsdMode::V)?,
        );
    }
    Ok(())
}
