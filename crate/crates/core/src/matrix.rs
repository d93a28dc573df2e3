//! Dense matrices generic over an exact integer scalar.
//!
//! The score pipeline multiplies the same matrices at very different parameter
//! scales, so the kernels are written once over a [`Scalar`] bound and
//! instantiated at `i32`/`i64`/`i128` (guarded fixed-width paths) and
//! [`num_bigint::BigInt`] (the always-correct fallback). Exactness is the only
//! contract: every backend must produce identical entries.

use num_traits::{One, Zero};
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

/// Exact scalar the matrix kernels are generic over.
///
/// Implemented by the fixed-width signed integers and `BigInt`; the blanket
/// impl picks up anything with by-ref arithmetic so distinguishing them is
/// purely a matter of the guard certificates in the caller.
pub trait Scalar:
    Clone
    + PartialEq
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> AddAssign<&'a Self>
    + AddAssign<Self>
    + for<'a> SubAssign<&'a Self>
{
}

impl<T> Scalar for T where
    T: Clone
        + PartialEq
        + Send
        + Sync
        + Zero
        + One
        + Add<Output = T>
        + Sub<Output = T>
        + Neg<Output = T>
        + Mul<Output = T>
        + for<'a> Mul<&'a T, Output = T>
        + for<'a> AddAssign<&'a T>
        + AddAssign<T>
        + for<'a> SubAssign<&'a T>
{
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut T {
        &mut self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.at(j, i).clone())
    }

    /// Entry-wise conversion into another scalar type.
    pub fn map<U: Scalar>(&self, mut f: impl FnMut(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(&mut f).collect(),
        }
    }

    /// Cubic product `self · other`, i-k-j loop order.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if *a == T::zero() {
                    continue;
                }
                let orow = other.row(k);
                let crow = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (c, b) in crow.iter_mut().zip(orow) {
                    *c += a.clone() * b;
                }
            }
        }
        out
    }

    /// Cubic product `self · otherᵀ` as row-by-row dot products.
    pub fn mul_transposed(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols, "shared dimension must agree");
        let mut out = Self::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            for j in 0..other.rows {
                let mut acc = T::zero();
                for (a, b) in self.row(i).iter().zip(other.row(j)) {
                    acc += a.clone() * b;
                }
                *out.at_mut(i, j) = acc;
            }
        }
        out
    }

    fn add(&self, other: &Self) -> Self {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.clone() + b.clone())
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.clone() - b.clone())
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| {
            if r0 + i < self.rows && c0 + j < self.cols {
                self.at(r0 + i, c0 + j).clone()
            } else {
                T::zero()
            }
        })
    }

    fn paste(&mut self, src: &Self, r0: usize, c0: usize) {
        for i in 0..src.rows.min(self.rows.saturating_sub(r0)) {
            for j in 0..src.cols.min(self.cols.saturating_sub(c0)) {
                *self.at_mut(r0 + i, c0 + j) = src.at(i, j).clone();
            }
        }
    }

    /// Strassen product with recursion cutoff; exact for integer scalars.
    ///
    /// Intermediate sums grow beyond the naive product bound by up to a
    /// factor of `4^depth`; callers of fixed-width instantiations must fold
    /// that into their overflow guard (see [`strassen_depth`]).
    pub fn mul_strassen(&self, other: &Self, cutoff: usize) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        assert!(cutoff >= 2);
        if self.rows.min(self.cols).min(other.cols) <= cutoff {
            return self.mul(other);
        }
        // Pad every dimension up to even, recurse on quadrants.
        let m = self.rows.div_ceil(2);
        let k = self.cols.div_ceil(2);
        let n = other.cols.div_ceil(2);

        let a11 = self.block(0, 0, m, k);
        let a12 = self.block(0, k, m, k);
        let a21 = self.block(m, 0, m, k);
        let a22 = self.block(m, k, m, k);
        let b11 = other.block(0, 0, k, n);
        let b12 = other.block(0, n, k, n);
        let b21 = other.block(k, 0, k, n);
        let b22 = other.block(k, n, k, n);

        let m1 = a11.add(&a22).mul_strassen(&b11.add(&b22), cutoff);
        let m2 = a21.add(&a22).mul_strassen(&b11, cutoff);
        let m3 = a11.mul_strassen(&b12.sub(&b22), cutoff);
        let m4 = a22.mul_strassen(&b21.sub(&b11), cutoff);
        let m5 = a11.add(&a12).mul_strassen(&b22, cutoff);
        let m6 = a21.sub(&a11).mul_strassen(&b11.add(&b12), cutoff);
        let m7 = a12.sub(&a22).mul_strassen(&b21.add(&b22), cutoff);

        let c11 = m1.add(&m4).sub(&m5).add(&m7);
        let c12 = m3.add(&m5);
        let c21 = m2.add(&m4);
        let c22 = m1.sub(&m2).add(&m3).add(&m6);

        let mut out = Self::zeros(self.rows, other.cols);
        out.paste(&c11, 0, 0);
        out.paste(&c12, 0, n);
        out.paste(&c21, m, 0);
        out.paste(&c22, m, n);
        out
    }
}

/// Number of Strassen recursion levels for the given shape and cutoff.
pub fn strassen_depth(rows: usize, inner: usize, cols: usize, cutoff: usize) -> u32 {
    let mut dim = rows.min(inner).min(cols);
    let mut depth = 0;
    while dim > cutoff {
        dim = dim.div_ceil(2);
        depth += 1;
    }
    depth
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use num_bigint::BigInt;
    use rand::Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix<i128> {
        let mut r = rng::stream(seed, 0);
        Matrix::from_fn(rows, cols, |_, _| r.gen_range(-1000i128..1000))
    }

    #[test]
    fn identity_is_neutral() {
        let m = random_matrix(9, 9, 1);
        let id = Matrix::<i128>::identity(9);
        assert_eq!(id.mul(&m), m);
        assert_eq!(m.mul(&id), m);
        assert_eq!(id.mul_strassen(&m, 2), m);
        assert_eq!(m.mul_transposed(&id.transpose()), m);
    }

    #[test]
    fn backends_agree_on_rectangular() {
        let a = random_matrix(17, 33, 2);
        let b = random_matrix(33, 17, 3);
        let cubic = a.mul(&b);
        assert_eq!(a.mul_strassen(&b, 4), cubic);
        assert_eq!(a.mul_transposed(&b.transpose()), cubic);
        let to_big = |v: &i128| BigInt::from(*v);
        let big = a.map(to_big).mul(&b.map(to_big));
        assert_eq!(cubic.map(to_big), big);
    }

    #[test]
    fn strassen_handles_odd_and_tiny() {
        for (m, k, n) in [(1, 1, 1), (5, 7, 3), (13, 13, 13), (16, 8, 32)] {
            let a = random_matrix(m, k, (m * 100 + k) as u64);
            let b = random_matrix(k, n, (k * 100 + n) as u64);
            assert_eq!(a.mul_strassen(&b, 2), a.mul(&b), "{m}x{k}x{n}");
        }
    }

    #[test]
    fn depth_accounting() {
        assert_eq!(strassen_depth(64, 64, 64, 64), 0);
        assert_eq!(strassen_depth(128, 128, 128, 64), 1);
        assert_eq!(strassen_depth(512, 1000, 512, 64), 3);
        assert_eq!(strassen_depth(64, 100_000, 64, 64), 0);
    }
}
