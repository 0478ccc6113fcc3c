//! Minimal dense linear algebra: row-major matrices, Cholesky factorization,
//! and triangular solves. Sized for the exact-GP regime (a few hundred rows),
//! where a hand-rolled factorization keeps everything generic over [`Scalar`].

use crate::num::{cast, Scalar};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    data: Vec<T>,
    rows: usize,
    cols: usize,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            data: vec![T::zero(); rows * cols],
            rows,
            cols,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Build from a flat row-major buffer.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "buffer length mismatch");
        Mat { data, rows, cols }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Mat {
            data,
            rows: rows.len(),
            cols,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// Select a subset of rows (indices may repeat).
    pub fn select_rows(&self, idx: &[usize]) -> Mat<T> {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Mat {
            data,
            rows: idx.len(),
            cols: self.cols,
        }
    }

    /// Stack `other` below `self`.
    pub fn vstack(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, other.cols, "column mismatch in vstack");
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Mat {
            data,
            rows: self.rows + other.rows,
            cols: self.cols,
        }
    }

    pub fn trace(&self) -> T {
        let n = self.rows.min(self.cols);
        (0..n).fold(T::zero(), |acc, i| acc + self[(i, i)])
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        self.rows_iter().map(|r| dot(r, x)).collect()
    }

    /// `self^T * x` without forming the transpose.
    pub fn transpose_matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.rows, "transpose_matvec dimension mismatch");
        let mut out = vec![T::zero(); self.cols];
        for (i, row) in self.rows_iter().enumerate() {
            let xi = x[i];
            for (o, &r) in out.iter_mut().zip(row) {
                *o = *o + xi * r;
            }
        }
        out
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl<T> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.cols + c]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.cols + c]
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    lower: Mat<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NotPositiveDefinite;

impl<T: Scalar> Cholesky<T> {
    /// Standard left-looking factorization; fails on a non-positive or
    /// non-finite pivot.
    pub fn new(a: &Mat<T>) -> Result<Self, NotPositiveDefinite> {
        assert_eq!(a.nrows(), a.ncols(), "cholesky needs a square matrix");
        let n = a.nrows();
        let mut l = Mat::zeros(n, n);
        for j in 0..n {
            let mut diag = a[(j, j)];
            for k in 0..j {
                diag = diag - l[(j, k)] * l[(j, k)];
            }
            if diag <= T::zero() || !diag.is_finite() {
                return Err(NotPositiveDefinite);
            }
            let dsqrt = diag.sqrt();
            l[(j, j)] = dsqrt;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s = s - l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / dsqrt;
            }
        }
        Ok(Cholesky { lower: l })
    }

    pub fn lower(&self) -> &Mat<T> {
        &self.lower
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    /// Solve `L x = b` by forward substitution.
    pub fn solve_lower(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for i in 0..n {
            let s = dot(&self.lower.row(i)[..i], &x[..i]);
            x[i] = (x[i] - s) / self.lower[(i, i)];
        }
        x
    }

    /// Solve `L^T x = b` by back substitution (column access on the stored
    /// lower factor, hence the index loop).
    #[allow(clippy::needless_range_loop)]
    pub fn solve_lower_transpose(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s = s - self.lower[(k, i)] * x[k];
            }
            x[i] = s / self.lower[(i, i)];
        }
        x
    }

    /// Solve `A x = b` where `A = L L^T`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        self.solve_lower_transpose(&self.solve_lower(b))
    }

    /// `log det A = 2 * sum(log L_ii)`.
    pub fn log_det(&self) -> T {
        let two = cast::<T>(2.0);
        (0..self.dim()).fold(T::zero(), |acc, i| acc + two * self.lower[(i, i)].ln())
    }

    /// Explicit `A^{-1}`, symmetrized. O(n^3); used only where the inverse is
    /// genuinely needed (marginal-likelihood gradients).
    pub fn inverse(&self) -> Mat<T> {
        let n = self.dim();
        let mut inv = Mat::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e[j] = T::one();
            let col = self.solve(&e);
            e[j] = T::zero();
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        let half = cast::<T>(0.5);
        for i in 0..n {
            for j in (i + 1)..n {
                let s = (inv[(i, j)] + inv[(j, i)]) * half;
                inv[(i, j)] = s;
                inv[(j, i)] = s;
            }
        }
        inv
    }

    /// Reconstruct `L L^T`.
    pub fn reconstruct(&self) -> Mat<T> {
        let n = self.dim();
        Mat::from_fn(n, n, |i, j| {
            let k = i.min(j) + 1;
            dot(&self.lower.row(i)[..k], &self.lower.row(j)[..k])
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spd3() -> Mat<f64> {
        Mat::from_rows(&[
            vec![4.0, 2.0, 0.6],
            vec![2.0, 5.0, 1.0],
            vec![0.6, 1.0, 3.0],
        ])
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = spd3();
        let ch = Cholesky::new(&a).unwrap();
        let r = ch.reconstruct();
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(r[(i, j)], a[(i, j)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_solve_matches_direct() {
        let a = spd3();
        let ch = Cholesky::new(&a).unwrap();
        let b = vec![1.0, -2.0, 0.5];
        let x = ch.solve(&b);
        let back = a.matvec(&x);
        for (bi, yi) in b.iter().zip(&back) {
            assert_relative_eq!(bi, yi, epsilon = 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(Cholesky::new(&a).is_err());
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let a = spd3();
        let inv = Cholesky::new(&a).unwrap().inverse();
        for i in 0..3 {
            let prod = a.matvec(inv.row(i));
            for (j, p) in prod.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(*p, expect, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn log_det_matches_direct_2x2() {
        let a = Mat::from_rows(&[vec![3.0, 1.0], vec![1.0, 2.0]]);
        let ch = Cholesky::new(&a).unwrap();
        assert_relative_eq!(ch.log_det(), (3.0f64 * 2.0 - 1.0).ln(), epsilon = 1e-12);
    }

    #[test]
    fn works_at_f32() {
        let a = Mat::<f32>::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]);
        let ch = Cholesky::new(&a).unwrap();
        let x = ch.solve(&[1.0, 1.0]);
        let back = a.matvec(&x);
        assert!((back[0] - 1.0).abs() < 1e-5 && (back[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn select_and_stack() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
        let s = a.select_rows(&[2, 0, 2]);
        assert_eq!(s.row(0), &[5.0, 6.0]);
        assert_eq!(s.row(1), &[1.0, 2.0]);
        assert_eq!(s.row(2), &[5.0, 6.0]);
        let v = a.vstack(&s);
        assert_eq!(v.nrows(), 6);
        assert_eq!(v.row(3), &[5.0, 6.0]);
    }
}
