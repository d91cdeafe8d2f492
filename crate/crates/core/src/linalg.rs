//! Dense complex matrices sized for per-bin array processing (a handful of
//! rows and columns).

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::{Error, Result};

/// Condition number of `A^H A` above which the pseudo-inverse is regularized.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

/// Tikhonov load, relative to `trace(A^H A) / M`, used on ill-conditioned input.
pub const REGULARIZATION: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn conj_transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn matmul(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                what: "matrix product inner dimension",
                expected: self.cols,
                found: rhs.rows,
            });
        }
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                for c in 0..rhs.cols {
                    out[(r, c)] += a * rhs[(k, c)];
                }
            }
        }
        Ok(out)
    }

    /// `y = self * x`, writing into `out`.
    pub fn mul_vec_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    pub fn sub(&self, rhs: &CMatrix) -> CMatrix {
        debug_assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|c| c.norm_sqr()).sum())
    }

    /// Maximum absolute column sum.
    fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self[(r, c)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn trace_re(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)].re).sum()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Lower-triangular Cholesky factor of a Hermitian positive-definite matrix,
/// or `None` when a pivot is not strictly positive.
fn cholesky(h: &CMatrix) -> Option<CMatrix> {
    let n = h.rows;
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = h[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let djj = libm::sqrt(d);
        l[(j, j)] = Complex64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = h[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

/// Solves `L L^H X = B` column by column.
fn cholesky_solve(l: &CMatrix, b: &CMatrix) -> CMatrix {
    let n = l.rows;
    let mut x = b.clone();
    for c in 0..b.cols {
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)].re;
        }
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in i + 1..n {
                s -= l[(k, i)].conj() * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)].re;
        }
    }
    x
}

/// Moore-Penrose pseudo-inverse of a tall or square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoInverse {
    pub matrix: CMatrix,
    /// Squared 1-norm condition estimate of `R`, standing in for that of
    /// `A^H A` (infinite when regularized).
    pub gram_condition: f64,
    /// Set when the Gram matrix was diagonally loaded.
    pub regularized: bool,
}

/// Householder QR of a tall matrix: returns `R` (M x M) and the first M rows
/// of `Q^H` (M x N), or `None` when a diagonal entry of `R` vanishes.
fn householder_qr(a: &CMatrix) -> Option<(CMatrix, CMatrix)> {
    let (n, m) = (a.rows, a.cols);
    let mut r = a.clone();
    let mut qh = CMatrix::identity(n);
    let mut v = vec![ZERO; n];
    for j in 0..m {
        let norm = libm::sqrt((j..n).map(|i| r[(i, j)].norm_sqr()).sum());
        if !(norm > 0.0) || !norm.is_finite() {
            return None;
        }
        let x0 = r[(j, j)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        let alpha = -phase * norm;
        for i in j..n {
            v[i] = r[(i, j)];
        }
        v[j] -= alpha;
        let vv: f64 = (j..n).map(|i| v[i].norm_sqr()).sum();
        if vv > 0.0 {
            let reflect = |mat: &mut CMatrix, cols: core::ops::Range<usize>| {
                for c in cols {
                    let dot: Complex64 = (j..n).map(|i| v[i].conj() * mat[(i, c)]).sum();
                    let f = dot * (2.0 / vv);
                    for i in j..n {
                        mat[(i, c)] -= v[i] * f;
                    }
                }
            };
            reflect(&mut r, j..m);
            reflect(&mut qh, 0..n);
        }
        r[(j, j)] = alpha;
        for i in j + 1..n {
            r[(i, j)] = ZERO;
        }
    }
    let r = CMatrix::from_fn(m, m, |i, c| r[(i, c)]);
    let qh = CMatrix::from_fn(m, n, |i, c| qh[(i, c)]);
    Some((r, qh))
}

/// Solves `R X = B` for upper-triangular `R`.
fn back_substitute(r: &CMatrix, b: &CMatrix) -> CMatrix {
    let m = r.rows;
    let mut x = b.clone();
    for c in 0..b.cols {
        for i in (0..m).rev() {
            let mut s = x[(i, c)];
            for k in i + 1..m {
                s -= r[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / r[(i, i)];
        }
    }
    x
}

/// Pseudo-inverse `R^-1 Q^H` from a Householder QR factorization, with
/// Tikhonov loading `(A^H A + delta I)^-1 A^H`,
/// `delta = REGULARIZATION * trace(A^H A) / M`, when `A` is rank deficient or
/// the condition number of `A^H A` exceeds [`MAX_GRAM_CONDITION`].
pub fn pseudo_inverse(a: &CMatrix) -> PseudoInverse {
    let m = a.cols;
    let ah = a.conj_transpose();
    if m <= a.rows {
        if let Some((r, qh)) = householder_qr(a) {
            let r_inv = back_substitute(&r, &CMatrix::identity(m));
            let cond = r.norm_one() * r_inv.norm_one();
            let cond = cond * cond;
            if cond.is_finite() && cond <= MAX_GRAM_CONDITION {
                return PseudoInverse {
                    matrix: r_inv.matmul(&qh).expect("conformant by construction"),
                    gram_condition: cond,
                    regularized: false,
                };
            }
        }
    }
    let gram = ah.matmul(a).expect("conformant by construction");
    let trace = gram.trace_re();
    if !(trace > 0.0) {
        return PseudoInverse {
            matrix: CMatrix::zeros(m, a.rows),
            gram_condition: f64::INFINITY,
            regularized: true,
        };
    }
    let delta = REGULARIZATION * trace / m as f64;
    let mut loaded = gram.clone();
    for i in 0..m {
        loaded[(i, i)] += delta;
    }
    let l = cholesky(&loaded).expect("diagonally loaded Gram matrix is positive definite");
    PseudoInverse {
        matrix: cholesky_solve(&l, &ah),
        gram_condition: f64::INFINITY,
        regularized: true,
    }
}
