//! Grid-based KL(q̂ | π) for 1-D ensembles, with q̂ a Gaussian KDE.
//!
//! cargo run --release --example kl_estimate

use svgd::diagnostics::{kl_estimate_1d, KdeBandwidth, KlGrid};
use svgd::rng;
use svgd::targets::GaussianTarget;

fn main() -> svgd::Result<()> {
    let target = GaussianTarget::standard(1)?;
    let grid = KlGrid::new(-10.0, 10.0, 2000)?;
    // KL(N(m, 1) | N(0, 1)) = m²/2
    for shift in [0.0, 0.5, 1.0, 2.0] {
        let e = rng::gaussian_ensemble(&mut rng::stream(3, 0), 2000, &[shift], 1.0)?;
        let est = kl_estimate_1d(&e, &target, grid, KdeBandwidth::Silverman)?;
        println!(
            "shift {shift:.1}: estimate {:.4}, exact {:.4}, bandwidth {:.3}",
            est.value,
            shift * shift / 2.0,
            est.bandwidth
        );
    }
    Ok(())
}
