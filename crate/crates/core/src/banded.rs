//! Complex banded linear systems.
//!
//! Gaussian elimination with partial pivoting restricted to the band, in the
//! layout used by LAPACK's `gbtrf`: the upper factor may grow to `ku + kl`
//! superdiagonals, so each row reserves room for that fill-in.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Systems smaller than this are handed to a dense LU.
pub const DENSE_CUTOFF: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<Complex64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![Complex64::new(0.0, 0.0); n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.kl >= i && j <= i + self.ku
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// Sets entry `(i, j)`.
    ///
    /// # Panics
    /// If `(i, j)` lies outside the declared band.
    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band (kl={}, ku={})", self.kl, self.ku);
        let k = self.idx(i, j);
        self.data[k] = value;
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Solves `A x = b`, dense LU for small systems and banded LU otherwise.
    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        if rhs.len() != self.n {
            return Err(Error::invalid("right-hand side length does not match matrix"));
        }
        if self.n < DENSE_CUTOFF {
            let lu = self.to_dense().lu();
            return lu
                .solve(&DVector::from_column_slice(rhs))
                .map(|x| x.iter().copied().collect())
                .ok_or(Error::SingularSystem { row: 0 });
        }
        BandLu::factor(self.clone())?.solve(rhs)
    }
}

/// In-place banded LU factorization with row interchanges.
#[derive(Debug, Clone)]
pub struct BandLu {
    a: BandMatrix,
    pivots: Vec<usize>,
    /// Multipliers of column k live at `k * kl ..`.
    lower: Vec<Complex64>,
}

impl BandLu {
    pub fn factor(mut a: BandMatrix) -> Result<Self> {
        let (n, kl, ku) = (a.n, a.kl, a.ku);
        let zero = Complex64::new(0.0, 0.0);
        let mut pivots = vec![0; n];
        let mut lower = vec![zero; n * kl];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + ku + kl).min(n - 1);
            let mut p = k;
            let mut best = a.data[a.idx(k, k)].norm();
            for i in k + 1..=last_row {
                let v = a.data[a.idx(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::SingularSystem { row: k });
            }
            pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    let (ik, ip) = (a.idx(k, j), a.idx(p, j));
                    a.data.swap(ik, ip);
                }
            }
            let pivot_row = a.idx(k, k);
            let inv = 1.0 / a.data[pivot_row];
            let len = last_col - k;
            for i in k + 1..=last_row {
                let l = a.data[a.idx(i, k)] * inv;
                lower[k * kl + (i - k - 1)] = l;
                if l == zero {
                    continue;
                }
                // row i starts after the pivot row's stored entries
                let row = a.idx(i, k + 1);
                let (head, tail) = a.data.split_at_mut(row);
                let u = &head[pivot_row + 1..pivot_row + 1 + len];
                for (x, u) in tail[..len].iter_mut().zip(u) {
                    *x -= l * u;
                }
            }
        }
        Ok(BandLu { a, pivots, lower })
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        let a = &self.a;
        let (n, kl, ku) = (a.n, a.kl, a.ku);
        if rhs.len() != n {
            return Err(Error::invalid("right-hand side length does not match matrix"));
        }
        let mut y = rhs.to_vec();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                y.swap(k, p);
            }
            let yk = y[k];
            let last = (k + kl).min(n - 1);
            for (yi, l) in y[k + 1..=last].iter_mut().zip(&self.lower[k * kl..]) {
                *yi -= l * yk;
            }
        }
        for i in (0..n).rev() {
            let row = a.idx(i, i);
            let last = (i + ku + kl).min(n - 1);
            let mut acc = y[i];
            for (off, j) in (i + 1..=last).enumerate() {
                acc -= a.data[row + 1 + off] * y[j];
            }
            y[i] = acc / a.data[row];
        }
        Ok(y)
    }
}
