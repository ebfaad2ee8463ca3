use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::svgd::StepSizePlan;
use crate::trace::Trace;

const MIN_WINDOW: usize = 10;

/// Least-squares line through `(log iter, log avg_ksd2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Inclusive iteration range the fit used.
    pub window: (usize, usize),
}

/// Ordinary least squares of `log y` on `log x`. Returns `(slope, intercept, r²)`.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidParameter(
            "log-log fit needs at least two paired points".into(),
        ));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter(
            "log-log fit needs strictly positive finite values".into(),
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in lx.iter().zip(&ly) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidParameter(
            "log-log fit needs distinct x values".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // a constant series is fit exactly by a flat line
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok((slope, intercept, r2))
}

/// Power-law fit of the running-average squared KSD over the inclusive
/// iteration `window`.
pub fn fit_rate(trace: &Trace, window: (usize, usize)) -> Result<RateFit> {
    let (lo, hi) = window;
    if lo < 1 || hi < lo || hi - lo + 1 < MIN_WINDOW {
        return Err(Error::InvalidParameter(format!(
            "rate window [{lo}, {hi}] must span at least {MIN_WINDOW} iterations"
        )));
    }
    let last = trace.records.last().map(|r| r.iter).unwrap_or(0);
    if hi > last {
        return Err(Error::InvalidParameter(format!(
            "rate window ends at {hi} but the trace stops at {last}"
        )));
    }
    let sel: Vec<_> = trace
        .records
        .iter()
        .filter(|r| r.iter >= lo && r.iter <= hi)
        .collect();
    if let Some(r) = sel
        .iter()
        .find(|r| r.avg_ksd2.is_nan() || r.avg_ksd2 <= 0.0)
    {
        return Err(Error::InvalidParameter(format!(
            "nonpositive running average {} at iteration {}",
            r.avg_ksd2, r.iter
        )));
    }
    let xs: Vec<f64> = sel.iter().map(|r| r.iter as f64).collect();
    let ys: Vec<f64> = sel.iter().map(|r| r.avg_ksd2).collect();
    let (slope, intercept, r2) = fit_loglog(&xs, &ys)?;
    Ok(RateFit {
        slope,
        intercept,
        r2,
        window,
    })
}

/// Per-step comparison of the KL decrease against `−c_γ · KSD²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescentReport {
    pub steps: usize,
    pub violations: usize,
    /// Largest `(KL_{n+1} − KL_n) − (−c_γ KSD²_n)` over all steps.
    pub worst_margin: Option<f64>,
    pub tolerance: f64,
}

/// Counts steps with `KL_{n+1} − KL_n > −c_γ KSD²_n + tolerance`.
///
/// `kl_series` holds `KL(μ̂₀), …, KL(μ̂_n)`: one entry more than the trace.
pub fn verify_descent(
    trace: &Trace,
    plan: &StepSizePlan,
    kl_series: &[f64],
    tolerance: f64,
) -> Result<DescentReport> {
    if kl_series.len() != trace.len() + 1 {
        return Err(Error::InvalidParameter(format!(
            "KL series has {} entries, expected {} (one per record plus the final state)",
            kl_series.len(),
            trace.len() + 1
        )));
    }
    let mut violations = 0;
    let mut worst: Option<f64> = None;
    for (n, rec) in trace.records.iter().enumerate() {
        let lhs = kl_series[n + 1] - kl_series[n];
        let rhs = -plan.c_gamma * rec.ksd2;
        let margin = lhs - rhs;
        if margin > tolerance {
            violations += 1;
        }
        worst = Some(worst.map_or(margin, |w: f64| w.max(margin)));
    }
    Ok(DescentReport {
        steps: trace.len(),
        violations,
        worst_margin: worst,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svgd::plan_step_size;
    use crate::trace::TraceRecord;

    fn synthetic(f: impl Fn(f64) -> f64, n: usize) -> Trace {
        Trace {
            records: (1..=n)
                .map(|i| TraceRecord {
                    iter: i,
                    ksd2: f(i as f64),
                    avg_ksd2: f(i as f64),
                    kl_est: None,
                    max_dir_norm: 0.0,
                    time_ms: 0.0,
                    bound_ok: None,
                })
                .collect(),
            ..Trace::default()
        }
    }

    #[test]
    fn exact_power_laws() {
        let fit = fit_rate(&synthetic(|n| 7.0 / n, 1000), (10, 1000)).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-6);
        assert!((fit.r2 - 1.0).abs() < 1e-9);
        assert!((fit.intercept - 7f64.ln()).abs() < 1e-6);

        let fit = fit_rate(&synthetic(|_| 3.0, 100), (1, 100)).unwrap();
        assert!(fit.slope.abs() < 1e-12);

        let fit = fit_rate(&synthetic(|n| n.powf(-0.5), 500), (5, 500)).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-9);
    }

    #[test]
    fn window_validation() {
        let t = synthetic(|n| 1.0 / n, 50);
        assert!(fit_rate(&t, (1, 5)).is_err());
        assert!(fit_rate(&t, (10, 60)).is_err());
        assert!(fit_rate(&t, (0, 20)).is_err());
        let t = synthetic(|n| if n > 20.0 { 0.0 } else { 1.0 }, 50);
        assert!(fit_rate(&t, (1, 50)).is_err());
    }

    #[test]
    fn descent_counts_planted_violation() {
        let plan = plan_step_size(2.0, 1.0, 1.0, 1.0, 0.5).unwrap();
        // c_γ = 0.1; KSD² = 1 each step, so each step must drop KL by ≥ 0.1 − tol
        let trace = synthetic(|_| 1.0, 3);
        let kl = [1.0, 0.8, 0.8, 0.5];
        let rep = verify_descent(&trace, &plan, &kl, 0.02).unwrap();
        assert_eq!(rep.violations, 1);
        assert!((rep.worst_margin.unwrap() - 0.1).abs() < 1e-12);
        assert!(verify_descent(&trace, &plan, &kl[..3], 0.02).is_err());
    }

    #[test]
    fn fast_decrease_has_no_violations() {
        let plan = plan_step_size(2.0, 1.0, 1.0, 1.0, 0.5).unwrap();
        let trace = synthetic(|_| 0.5, 4);
        let kl = [2.0, 1.5, 1.0, 0.5, 0.0];
        assert_eq!(
            verify_descent(&trace, &plan, &kl, 0.02).unwrap().violations,
            0
        );
    }

    #[test]
    fn stationary_trace_with_vanishing_ksd() {
        let plan = plan_step_size(2.0, 1.0, 1.0, 1.0, 0.5).unwrap();
        let trace = synthetic(|_| 0.0, 5);
        let kl = [0.3; 6];
        let rep = verify_descent(&trace, &plan, &kl, 0.02).unwrap();
        assert_eq!(rep.violations, 0);
        assert_eq!(rep.worst_margin, Some(0.0));
    }
}
