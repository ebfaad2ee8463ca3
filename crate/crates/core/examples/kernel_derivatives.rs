//! Kernel values, analytic derivatives, bounds and the median bandwidth.
//!
//! cargo run --example kernel_derivatives

use svgd::kernels::{median_bandwidth, Kernel};
use svgd::ParticleEnsemble;

fn main() -> svgd::Result<()> {
    let x = [0.0, 0.0];
    let y = [1.0, 0.5];
    for k in [Kernel::rbf(1.0, 2)?, Kernel::imq(1.0, -0.5, 2)?] {
        println!("{:?}", k.family());
        println!("  k(x, y)          = {:.6}", k.eval(&x, &y)?);
        println!("  grad_x k(x, y)   = {:?}", k.grad1(&x, &y)?);
        println!("  tr grad_x grad_y = {:.6}", k.trace_grad12(&x, &y)?);
        println!("  bound B          = {:.6}", k.bound());
        println!("  Lipschitz D      = {:.6}", k.lipschitz_bound());
    }

    let e = ParticleEnsemble::from_scalars(&[-1.2, -0.3, 0.4, 0.9, 2.5])?;
    let h = median_bandwidth(&e)?;
    println!("median bandwidth of 5 points: h = {h:.6}");
    Ok(())
}
