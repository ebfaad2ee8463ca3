//! Exact squared Wasserstein-2 distances between empirical measures.

use crate::ensemble::{sq_dist, ParticleEnsemble};
use crate::error::{check_dim, Error, Result};

/// Largest ensemble accepted by the assignment solver.
pub const ASSIGNMENT_MAX_POINTS: usize = 256;

fn sorted_1d(e: &ParticleEnsemble) -> Result<Vec<f64>> {
    if e.dim() != 1 {
        return Err(Error::Unsupported(format!(
            "sorted coupling needs d = 1, got d = {}; use w2_squared_assignment",
            e.dim()
        )));
    }
    let mut v = e.as_flat().to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// `W₂²` between two equal-size 1-D empirical measures via the sorted
/// (quantile) coupling.
pub fn w2_squared_1d(a: &ParticleEnsemble, b: &ParticleEnsemble) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidParameter(format!(
            "ensembles differ in size ({} vs {}); resample first",
            a.len(),
            b.len()
        )));
    }
    let (sa, sb) = (sorted_1d(a)?, sorted_1d(b)?);
    Ok(sa
        .iter()
        .zip(&sb)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.len() as f64)
}

/// `W₂²` between 1-D empirical measures of arbitrary sizes, integrating
/// `(F⁻¹(u) − G⁻¹(u))²` exactly over the merged quantile breakpoints.
pub fn w2_squared_1d_unequal(a: &ParticleEnsemble, b: &ParticleEnsemble) -> Result<f64> {
    let (sa, sb) = (sorted_1d(a)?, sorted_1d(b)?);
    let (n, m) = (sa.len(), sb.len());
    // breakpoints i/n and j/m compared exactly as i·m vs j·n
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = 0u128;
    let total = (n as u128) * (m as u128);
    let mut acc = 0.0;
    while i < n && j < m {
        let next_a = (i as u128 + 1) * m as u128;
        let next_b = (j as u128 + 1) * n as u128;
        let next = next_a.min(next_b);
        let diff = sa[i] - sb[j];
        acc += diff * diff * (next - prev) as f64;
        prev = next;
        if next_a == next {
            i += 1;
        }
        if next_b == next {
            j += 1;
        }
    }
    Ok(acc / total as f64)
}

/// `W₂²` between equal-size empirical measures in any dimension, by exact
/// optimal assignment on the squared-distance cost matrix.
pub fn w2_squared_assignment(a: &ParticleEnsemble, b: &ParticleEnsemble) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    let n = a.len();
    if n != b.len() {
        return Err(Error::InvalidParameter(format!(
            "ensembles differ in size ({} vs {})",
            n,
            b.len()
        )));
    }
    if n > ASSIGNMENT_MAX_POINTS {
        return Err(Error::InvalidParameter(format!(
            "assignment solver is limited to {ASSIGNMENT_MAX_POINTS} points, got {n}; \
             use the 1-D routine or subsample"
        )));
    }
    let cost: Vec<f64> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| sq_dist(a.point(i), b.point(j)))
        .collect();
    let assignment = hungarian(&cost, n);
    Ok(assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i * n + j])
        .sum::<f64>()
        / n as f64)
}

/// Minimum-cost perfect matching for a square cost matrix (row-major),
/// shortest augmenting path with potentials, `O(n³)`. Returns the column
/// assigned to each row.
pub(crate) fn hungarian(cost: &[f64], n: usize) -> Vec<usize> {
    // 1-based arrays; index 0 is the virtual source column
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if row_of[j] > 0 {
            assignment[row_of[j] - 1] = j - 1;
        }
    }
    assignment
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e1(v: &[f64]) -> ParticleEnsemble {
        ParticleEnsemble::from_scalars(v).unwrap()
    }

    #[test]
    fn one_dimensional_examples() {
        assert_eq!(
            w2_squared_1d(&e1(&[0.3, 1.2]), &e1(&[0.3, 1.2])).unwrap(),
            0.0
        );
        assert_eq!(
            w2_squared_1d(&e1(&[0.0, 2.0]), &e1(&[1.0, 3.0])).unwrap(),
            1.0
        );
        assert_eq!(
            w2_squared_1d(&e1(&[0.0, 1.0]), &e1(&[1.0, 0.0])).unwrap(),
            0.0
        );
        assert!(w2_squared_1d(&e1(&[0.0, 1.0]), &e1(&[1.0])).is_err());
        let two_d = ParticleEnsemble::from_rows(&[vec![0.0, 0.0]]).unwrap();
        assert!(w2_squared_1d(&two_d, &two_d).is_err());
    }

    #[test]
    fn assignment_examples() {
        let a = ParticleEnsemble::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let b = ParticleEnsemble::from_rows(&[vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!((w2_squared_assignment(&a, &b).unwrap() - 1.0).abs() < 1e-15);
        let c = ParticleEnsemble::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(w2_squared_assignment(&a, &c).unwrap(), 0.0);
    }

    #[test]
    fn assignment_rejects_large_inputs() {
        let big = e1(&vec![0.0; ASSIGNMENT_MAX_POINTS + 1]);
        assert!(w2_squared_assignment(&big, &big).is_err());
    }

    #[test]
    fn unequal_sizes_reduce_to_equal_case() {
        let a = e1(&[0.0, 2.0]);
        let b = e1(&[1.0, 3.0]);
        assert_eq!(w2_squared_1d_unequal(&a, &b).unwrap(), 1.0);
        // duplicating every atom leaves the measure unchanged
        let b2 = e1(&[1.0, 1.0, 3.0, 3.0]);
        assert_eq!(w2_squared_1d_unequal(&a, &b2).unwrap(), 1.0);
        // one atom against two: ½(0−(−1))² + ½(0−1)² = 1
        assert_eq!(
            w2_squared_1d_unequal(&e1(&[0.0]), &e1(&[-1.0, 1.0])).unwrap(),
            1.0
        );
        // sizes 2 and 3: quantile pieces [0,1/3),[1/3,1/2),[1/2,2/3),[2/3,1)
        let v = w2_squared_1d_unequal(&e1(&[0.0, 6.0]), &e1(&[0.0, 3.0, 6.0])).unwrap();
        let expected = 0.0 + 9.0 * (1.0 / 6.0) + 9.0 * (1.0 / 6.0) + 0.0;
        assert!((v - expected).abs() < 1e-14);
    }

    #[test]
    fn hungarian_small_matrix() {
        // optimum picks (0,1), (1,0), (2,2): 1 + 2 + 2 = 5
        let cost = [4.0, 1.0, 3.0, 2.0, 0.5, 5.0, 3.0, 2.0, 2.0];
        let a = hungarian(&cost, 3);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[i * 3 + j]).sum();
        assert_eq!(total, 5.0);
    }
}
