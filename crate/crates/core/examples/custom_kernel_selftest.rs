//! The derivative oracles accept any `PairKernel`. A kernel with a wrong
//! gradient sign is caught.
//!
//! cargo run --example custom_kernel_selftest

use svgd::kernels::{Kernel, PairKernel};
use svgd::selftest;

struct FlippedGradient(Kernel);

impl PairKernel for FlippedGradient {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval(&self, x: &[f64], y: &[f64]) -> svgd::Result<f64> {
        self.0.eval(x, y)
    }
    fn grad1(&self, x: &[f64], y: &[f64]) -> svgd::Result<Vec<f64>> {
        Ok(self.0.grad1(x, y)?.into_iter().map(|g| -g).collect())
    }
    fn trace_grad12(&self, x: &[f64], y: &[f64]) -> svgd::Result<f64> {
        self.0.trace_grad12(x, y)
    }
}

fn main() -> svgd::Result<()> {
    let good = Kernel::rbf(1.0, 2)?;
    let bad = FlippedGradient(good);
    for c in selftest::kernel_checks("rbf", &good) {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    for c in selftest::kernel_checks("flipped", &bad) {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let report = selftest::run_with(&[("flipped", &bad)]);
    println!(
        "full selftest with the flipped kernel: {} failures",
        report.failures()
    );
    Ok(())
}
