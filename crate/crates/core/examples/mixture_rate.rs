//! The 200-particle mixture experiment: running-average KSD² rate, the
//! descent check against a KDE estimate of KL, and the final particles.
//!
//! cargo run --release --example mixture_rate [iterations]

use svgd::experiment::{execute_run, prepare, ExperimentConfig};

fn main() -> svgd::Result<()> {
    let iterations = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("iterations must be an integer"))
        .unwrap_or(2000);
    let mut cfg = ExperimentConfig::mixture_recipe();
    cfg.iterations = iterations;
    cfg.diagnostics.rate_window = None;

    let prepared = prepare(&cfg)?;
    let p = prepared.plan;
    println!(
        "h = {:?}, gamma = {:.5}, c_gamma = {:.5}",
        prepared.kernel.family(),
        p.gamma,
        p.c_gamma
    );

    let a = execute_run(&prepared)?;
    for r in a
        .trace
        .records
        .iter()
        .filter(|r| r.iter.is_power_of_two() || r.iter == iterations)
    {
        println!(
            "iter {:>6}  KSD² {:.5}  avg {:.5}  KL {:.4}",
            r.iter,
            r.ksd2,
            r.avg_ksd2,
            r.kl_est.unwrap()
        );
    }
    if let Some(fit) = a.rate_fit {
        println!(
            "slope of running average over {:?}: {:.3} (r² {:.3})",
            fit.window, fit.slope, fit.r2
        );
    }
    if let Some(d) = &a.descent {
        println!(
            "descent violations: {} of {} (eps {})",
            d.violations, d.steps, d.tolerance
        );
    }
    let right = a
        .final_ensemble
        .as_flat()
        .iter()
        .filter(|x| **x > 0.0)
        .count();
    println!(
        "{right} of {} particles ended in the right-hand mode (weight 2/3)",
        a.final_ensemble.len()
    );
    Ok(())
}
