//! A reduced finite-particle sweep: W₂² between N interacting particles and
//! a large reference ensemble, against the theoretical bound.
//!
//! cargo run --release --example propagation_of_chaos

use svgd::chaos::{run_coupled, CoupledRun, InitialLaw};
use svgd::kernels::Kernel;
use svgd::targets::TargetSpec;

fn main() -> svgd::Result<()> {
    let target = TargetSpec::default_mixture().build()?;
    let kernel = Kernel::rbf(1.0, 1)?;
    let run = CoupledRun {
        sizes: vec![10, 20, 40],
        reference_size: 400,
        horizon: 1.0,
        step_size: 0.05,
        repetitions: 8,
        seed: 11,
        record_every: 10,
        steps: None,
    };
    let init = InitialLaw {
        mean: vec![0.0],
        sd: 1.0,
    };
    let result = run_coupled(&run, target.as_ref(), &kernel, &init)?;

    println!("L = {:?}", result.constants.lipschitz);
    for r in &result.rows {
        println!(
            "n {:>3}  N {:>3}  W2² {:.5} ± {:.5}  bound {:.3e}",
            r.n,
            r.particles,
            r.w2sq_mean,
            r.w2sq_stderr,
            r.bound.unwrap_or(f64::NAN)
        );
    }
    let (slope, _, r2) = result.decay_fit(result.final_step())?;
    println!("slope in N at the final step: {slope:.3} (r² {r2:.3})");
    Ok(())
}
