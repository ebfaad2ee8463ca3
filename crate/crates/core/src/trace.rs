//! Per-iteration records of a sampler run and their CSV form.

use std::fmt::Write as _;

use serde::Serialize;

/// Header of the trace CSV, in column order.
pub const TRACE_HEADER: &str = "iter,ksd2,avg_ksd2,kl_est,max_dir_norm,time_ms";

/// Diagnostics of the ensemble entering update number `iter` (1-based), i.e.
/// of `μ̂_{iter−1}`, together with the direction applied in that update.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub ksd2: f64,
    /// Mean of `ksd2` over records `1..=iter`.
    pub avg_ksd2: f64,
    pub kl_est: Option<f64>,
    pub max_dir_norm: f64,
    pub time_ms: f64,
    /// Outcome of the pointwise field bound `max ‖g(xᵢ)‖ ≤ B √KSD²`, when
    /// checked at this iteration.
    pub bound_ok: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    /// KL estimate after the last update, so that `kl_series()` has one more
    /// entry than there are records.
    pub final_kl: Option<f64>,
    /// Iterations whose squared KSD reached the assumed bound `C`.
    pub ksd_bound_exceedances: usize,
    /// Iterations at which the pointwise field bound failed.
    pub field_bound_failures: usize,
    /// KL evaluations during which part of the ensemble lay off the grid.
    pub kl_mass_warnings: usize,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn ksd2(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.ksd2).collect()
    }

    pub fn avg_ksd2(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.avg_ksd2).collect()
    }

    /// `KL(μ̂₀), …, KL(μ̂_n)` when KL was estimated at every iteration.
    pub fn kl_series(&self) -> Option<Vec<f64>> {
        let mut out: Vec<f64> = self
            .records
            .iter()
            .map(|r| r.kl_est)
            .collect::<Option<_>>()?;
        out.push(self.final_kl?);
        Some(out)
    }

    /// Renders the trace as CSV. Missing KL values are written as empty fields.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for r in &self.records {
            let kl = r.kl_est.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.iter, r.ksd2, r.avg_ksd2, kl, r.max_dir_norm, r.time_ms
            );
        }
        out
    }
}
