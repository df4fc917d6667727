//! Small dense symmetric linear algebra.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = self.data[i * self.n + j] + v;
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        self.data
            .chunks_exact(self.n)
            .map(|row| crate::scalar::dot(row, x))
            .collect()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// Solves `A x = b` for symmetric positive definite `A`.
    ///
    /// The system is equilibrated with the diagonal (Jacobi) scaling before
    /// the Cholesky factorization, which matters when diagonal entries span
    /// many orders of magnitude.
    pub fn solve_spd(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut scale = Vec::with_capacity(n);
        for i in 0..n {
            let d = self.get(i, i);
            if !(d > T::zero()) || !d.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-positive diagonal entry {d} at row {i}"
                )));
            }
            scale.push(T::one() / d.sqrt());
        }
        let mut l = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.get(i, j) * scale[i] * scale[j];
                for k in 0..j {
                    s = s - l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if !(s > T::zero()) {
                        return Err(Error::Numerical(format!(
                            "matrix not positive definite at pivot {i}"
                        )));
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        // forward then backward substitution on the scaled system
        let mut y: Vec<T> = b.iter().zip(&scale).map(|(&bi, &si)| bi * si).collect();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s = s - l[i * n + k] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s = s - l[k * n + i] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        let x: Vec<T> = y.iter().zip(&scale).map(|(&yi, &si)| yi * si).collect();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite solution entries".into()));
        }
        Ok(x)
    }
}
