use crate::error::{Error, Result};

/// `N` points in `R^d`, stored row-major. Represents the empirical measure
/// `(1/N) Σ δ_{x_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    data: Vec<f64>,
    n: usize,
    d: usize,
}

impl ParticleEnsemble {
    /// Builds an ensemble from a flat row-major buffer of `n * d` coordinates.
    pub fn from_flat(data: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if data.is_empty() || !data.len().is_multiple_of(d) {
            return Err(Error::InvalidParameter(format!(
                "buffer of length {} is not a non-empty multiple of d = {d}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite coordinate in particle {}",
                pos / d
            )));
        }
        let n = data.len() / d;
        Ok(Self { data, n, d })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map(Vec::len).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * d);
        for row in rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(data, d)
    }

    /// One-dimensional ensemble from scalar positions.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::from_flat(values.to_vec(), 1)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.d)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Keeps the first `n` particles.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n {
            return Err(Error::InvalidParameter(format!(
                "cannot truncate {} particles to {n}",
                self.n
            )));
        }
        Self::from_flat(self.data[..n * self.d].to_vec(), self.d)
    }

    /// Translates every particle by `shift`.
    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        crate::error::check_dim(self.d, shift.len())?;
        let mut out = self.clone();
        for row in out.data.chunks_exact_mut(self.d) {
            for (v, s) in row.iter_mut().zip(shift) {
                *v += s;
            }
        }
        Ok(out)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for p in self.points() {
            for (acc, v) in m.iter_mut().zip(p) {
                *acc += v;
            }
        }
        m.iter_mut().for_each(|v| *v /= self.n as f64);
        m
    }

    /// Total variance `E‖x − E x‖²` of the empirical measure.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.points()
            .map(|p| {
                p.iter()
                    .zip(&m)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
            })
            .sum::<f64>()
            / self.n as f64
    }
}

pub(crate) fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_and_non_finite() {
        assert!(ParticleEnsemble::from_flat(vec![1.0, 2.0, 3.0], 2).is_err());
        assert!(ParticleEnsemble::from_flat(vec![], 1).is_err());
        assert!(ParticleEnsemble::from_flat(vec![f64::NAN], 1).is_err());
        assert!(ParticleEnsemble::from_rows(&[vec![0.0, 1.0], vec![2.0]]).is_err());
    }

    #[test]
    fn variance_of_two_points() {
        let e = ParticleEnsemble::from_scalars(&[-1.0, 1.0]).unwrap();
        assert_eq!(e.mean(), vec![0.0]);
        assert_eq!(e.variance(), 1.0);
    }
}
