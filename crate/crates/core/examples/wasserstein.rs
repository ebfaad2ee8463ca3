//! Exact W₂² between empirical measures: sorted coupling, quantile merge for
//! unequal sizes, and optimal assignment in any dimension.
//!
//! cargo run --example wasserstein

use svgd::diagnostics::{w2_squared_1d, w2_squared_1d_unequal, w2_squared_assignment};
use svgd::ParticleEnsemble;

fn main() -> svgd::Result<()> {
    let a = ParticleEnsemble::from_scalars(&[0.0, 1.0, 3.0])?;
    let b = ParticleEnsemble::from_scalars(&[2.0, 0.5, 1.0])?;
    println!("sorted coupling   {:.6}", w2_squared_1d(&a, &b)?);
    println!("assignment        {:.6}", w2_squared_assignment(&a, &b)?);

    let c = ParticleEnsemble::from_scalars(&[0.0, 1.0])?;
    let d = ParticleEnsemble::from_scalars(&[0.0, 0.5, 1.0])?;
    println!("unequal sizes     {:.6}", w2_squared_1d_unequal(&c, &d)?);

    let p = ParticleEnsemble::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]])?;
    let q = p.translated(&[0.5, -0.5])?;
    println!(
        "2-D translation   {:.6} (= |shift|² = 0.5)",
        w2_squared_assignment(&p, &q)?
    );
    Ok(())
}
