//! Dense row-major matrices and LU factorization with partial pivoting.

use std::ops::{Index, IndexMut};

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("matrix is singular to working precision (pivot column {0})")]
    Singular(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(LinalgError::Dimension(r.len(), cols));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix { rows: rows.len(), cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.rows).map(|i| self.row(i).iter().zip(v).fold(T::zero(), |acc, (&a, &b)| acc + a * b)).collect()
    }

    /// Row-wise Σ_j |a_ij|·|v_j|.
    pub fn abs_mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).fold(T::zero(), |acc, (&a, &b)| acc + a.abs() * b.abs()))
            .collect()
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// PA = LU with unit lower-triangular L stored below the diagonal.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    pub fn factor(mut a: Matrix<T>) -> Result<Self, LinalgError> {
        if a.rows != a.cols {
            return Err(LinalgError::Dimension(a.rows, a.cols));
        }
        let n = a.rows;
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = a[(k, k)].abs();
            for i in k + 1..n {
                let v = a[(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > T::zero()) || !best.is_finite() {
                return Err(LinalgError::Singular(k));
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
            }
            let (top, bottom) = a.data.split_at_mut((k + 1) * n);
            let pivot_row = &top[k * n..];
            let pivot = pivot_row[k];
            for row in bottom.chunks_exact_mut(n) {
                let l = row[k] / pivot;
                row[k] = l;
                if l == T::zero() {
                    continue;
                }
                for (x, &u) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                    *x -= l * u;
                }
            }
        }
        Ok(Lu { lu: a, perm })
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>, LinalgError> {
        let n = self.lu.rows;
        if b.len() != n {
            return Err(LinalgError::Dimension(b.len(), n));
        }
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let mut s = x[i];
            for j in 0..i {
                s -= row[j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut s = x[i];
            for j in i + 1..n {
                s -= row[j] * x[j];
            }
            x[i] = s / row[i];
        }
        Ok(x)
    }
}
