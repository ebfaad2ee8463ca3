//! Pairwise sums over an ensemble: the kernelized SVGD vector field and the
//! Stein-kernel double sum. Rows are independent and may be evaluated in
//! parallel; each row is reduced in a fixed `j` order and row totals are
//! combined in row order, so results do not depend on the thread count.

use rayon::prelude::*;

use crate::ensemble::ParticleEnsemble;
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::targets::Target;

/// Below this many rows the work is done on the calling thread.
const PAR_MIN_ROWS: usize = 64;

/// Scores `∇log π(xᵢ)` for every particle, row-major.
pub(crate) fn scores(ensemble: &ParticleEnsemble, target: &dyn Target) -> Result<Vec<f64>> {
    let d = ensemble.dim();
    crate::error::check_dim(target.dim(), d)?;
    let mut out = vec![0.0; ensemble.len() * d];
    for (i, (x, s)) in ensemble.points().zip(out.chunks_exact_mut(d)).enumerate() {
        target.score_into(x, s);
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteScore { index: i });
        }
    }
    Ok(out)
}

fn rows_mut<F>(out: &mut [f64], width: usize, rows: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    if rows >= PAR_MIN_ROWS {
        out.par_chunks_exact_mut(width)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
    } else {
        out.chunks_exact_mut(width)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
    }
}

/// `g(z) = (1/N) Σⱼ [ sⱼ k(xⱼ, z) + ∇₁k(xⱼ, z) ]` evaluated at every query
/// point, where `(xⱼ, sⱼ)` are the source particles and their scores.
pub(crate) fn field_at(
    sources: &ParticleEnsemble,
    source_scores: &[f64],
    kernel: &Kernel,
    queries: &[f64],
) -> Vec<f64> {
    let d = sources.dim();
    let n = sources.len() as f64;
    let mut out = vec![0.0; queries.len()];
    rows_mut(&mut out, d, queries.len() / d, |i, row| {
        let z = &queries[i * d..(i + 1) * d];
        for (x, s) in sources.points().zip(source_scores.chunks_exact(d)) {
            let r2 = crate::ensemble::sq_dist(x, z);
            let p = kernel.profile(r2);
            for a in 0..d {
                row[a] += s[a] * p.value + 2.0 * p.d1 * (x[a] - z[a]);
            }
        }
        row.iter_mut().for_each(|v| *v /= n);
    });
    out
}

/// Row `i` of the Stein-kernel matrix summed over `j`, plus its diagonal entry.
fn stein_row(ensemble: &ParticleEnsemble, scores: &[f64], kernel: &Kernel, i: usize) -> (f64, f64) {
    let d = ensemble.dim();
    let xi = ensemble.point(i);
    let si = &scores[i * d..(i + 1) * d];
    let mut total = 0.0;
    let mut diag = 0.0;
    for (j, (xj, sj)) in ensemble.points().zip(scores.chunks_exact(d)).enumerate() {
        let r2 = crate::ensemble::sq_dist(xi, xj);
        let p = kernel.profile(r2);
        let mut cross = 0.0;
        let mut ss = 0.0;
        for a in 0..d {
            cross += (sj[a] - si[a]) * (xi[a] - xj[a]);
            ss += si[a] * sj[a];
        }
        let u = kernel.trace_from_profile(&p, r2) + 2.0 * p.d1 * cross + ss * p.value;
        total += u;
        if j == i {
            diag = u;
        }
    }
    (total, diag)
}

/// Sum of all Stein-kernel entries and sum of the diagonal entries.
pub(crate) fn stein_sums(
    ensemble: &ParticleEnsemble,
    scores: &[f64],
    kernel: &Kernel,
) -> (f64, f64) {
    let n = ensemble.len();
    let rows: Vec<(f64, f64)> = if n >= PAR_MIN_ROWS {
        (0..n)
            .into_par_iter()
            .map(|i| stein_row(ensemble, scores, kernel, i))
            .collect()
    } else {
        (0..n)
            .map(|i| stein_row(ensemble, scores, kernel, i))
            .collect()
    };
    rows.iter()
        .fold((0.0, 0.0), |(t, dg), (rt, rd)| (t + rt, dg + rd))
}

/// Field at the particles together with the Stein-kernel sums, in one pass
/// over the pairs.
pub(crate) struct FieldEval {
    pub direction: Vec<f64>,
    pub stein_total: f64,
    pub stein_diag: f64,
}

pub(crate) fn field_and_stein(
    ensemble: &ParticleEnsemble,
    scores: &[f64],
    kernel: &Kernel,
) -> FieldEval {
    let d = ensemble.dim();
    let n = ensemble.len();
    let nf = n as f64;
    let row = |i: usize| -> (Vec<f64>, f64, f64) {
        let xi = ensemble.point(i);
        let si = &scores[i * d..(i + 1) * d];
        let mut dir = vec![0.0; d];
        let mut total = 0.0;
        let mut diag = 0.0;
        for (j, (xj, sj)) in ensemble.points().zip(scores.chunks_exact(d)).enumerate() {
            let r2 = crate::ensemble::sq_dist(xi, xj);
            let p = kernel.profile(r2);
            let mut cross = 0.0;
            let mut ss = 0.0;
            for a in 0..d {
                let diff = xj[a] - xi[a];
                dir[a] += sj[a] * p.value + 2.0 * p.d1 * diff;
                cross -= (sj[a] - si[a]) * diff;
                ss += si[a] * sj[a];
            }
            let u = kernel.trace_from_profile(&p, r2) + 2.0 * p.d1 * cross + ss * p.value;
            total += u;
            if j == i {
                diag = u;
            }
        }
        dir.iter_mut().for_each(|v| *v /= nf);
        (dir, total, diag)
    };
    let rows: Vec<(Vec<f64>, f64, f64)> = if n >= PAR_MIN_ROWS {
        (0..n).into_par_iter().map(row).collect()
    } else {
        (0..n).map(row).collect()
    };
    let mut direction = Vec::with_capacity(n * d);
    let (mut stein_total, mut stein_diag) = (0.0, 0.0);
    for (dir, t, dg) in rows {
        direction.extend_from_slice(&dir);
        stein_total += t;
        stein_diag += dg;
    }
    FieldEval {
        direction,
        stein_total,
        stein_diag,
    }
}
