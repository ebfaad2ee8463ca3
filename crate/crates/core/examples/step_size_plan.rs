//! Step size from the descent-lemma constants, and how it reacts to them.
//!
//! cargo run --example step_size_plan

use svgd::diagnostics::{ksd_squared, KsdMode};
use svgd::kernels::{median_bandwidth, Kernel};
use svgd::rng;
use svgd::svgd::plan_step_size;
use svgd::targets::TargetSpec;

fn main() -> svgd::Result<()> {
    let target = TargetSpec::default_mixture().build()?;
    let initial = rng::gaussian_ensemble(&mut rng::stream(0, rng::RUN_STREAM), 200, &[-10.0], 1.0)?;
    let kernel = Kernel::rbf(median_bandwidth(&initial)?, 1)?;
    let c = 2.0 * ksd_squared(&initial, target.as_ref(), &kernel, KsdMode::V)?;

    println!(
        "B = {:.4}, M = {:.4}, C = {c:.4}",
        kernel.bound(),
        target.hessian_bound()
    );
    println!(
        "{:>6} {:>10} {:>12} {:>12}",
        "alpha", "gamma", "c_gamma", "limited by"
    );
    for alpha in [1.1, 1.5, 2.0, 3.0, 5.0] {
        let p = plan_step_size(alpha, kernel.bound(), target.hessian_bound(), c, 0.5)?;
        let limit = if p.invertibility_limit() < p.descent_limit() {
            "invertibility"
        } else {
            "descent"
        };
        println!(
            "{alpha:>6.1} {:>10.6} {:>12.6} {limit:>12}",
            p.gamma, p.c_gamma
        );
    }
    Ok(())
}
