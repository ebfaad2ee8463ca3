//! Scores and curvature bounds of the built-in targets.
//!
//! cargo run --example target_scores

use nalgebra::DMatrix;
use svgd::targets::{GaussianMixture1D, GaussianTarget, MixtureTarget, Target};

fn main() -> svgd::Result<()> {
    let mix = MixtureTarget::new(GaussianMixture1D::new(
        vec![1.0 / 3.0, 2.0 / 3.0],
        vec![-2.0, 2.0],
        vec![1.0, 1.0],
    )?)?;
    println!("mixture on {:?}", mix.bound_interval());
    println!("  M   = sup |V''| ~ {:.4}", mix.hessian_bound());
    println!("  C_V = sup |score| ~ {:.4}", mix.score_bound().unwrap());
    for x in [-4.0, -2.0, 0.0, 2.0, 4.0] {
        println!(
            "  x = {x:+.1}: log pi = {:+.5}, score = {:+.5}",
            mix.log_density(&[x]).unwrap(),
            mix.score(&[x])?[0]
        );
    }

    let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]);
    let g = GaussianTarget::new(vec![1.0, -1.0], cov)?;
    println!(
        "correlated Gaussian: M = 1/lambda_min = {:.4}",
        g.hessian_bound()
    );
    println!("  score at origin = {:?}", g.score(&[0.0, 0.0])?);
    Ok(())
}
