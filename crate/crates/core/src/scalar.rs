//! Scalars for combinatorial work: exact rationals or tolerant floats.
//!
//! Dense row-major matrices (`Vec<Vec<T>>`) are enough here; instances have at
//! most a dozen rows.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};

/// Tolerance for feasibility and rank tests on floating-point input.
pub const COMB_EPS: f64 = 1e-9;

pub trait Scalar: Clone + Debug + PartialOrd + Num + Signed {
    /// Zero test: exact for rationals, `|x| <= COMB_EPS` for floats.
    fn negligible(&self) -> bool;
    fn to_f64(&self) -> f64;
    fn from_i64(x: i64) -> Self;

    /// Sign with the zero test applied: -1, 0 or 1.
    fn sign(&self) -> i8 {
        if self.negligible() {
            0
        } else if self.is_positive() {
            1
        } else {
            -1
        }
    }
}

impl Scalar for f64 {
    fn negligible(&self) -> bool {
        self.abs() <= COMB_EPS
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn from_i64(x: i64) -> Self {
        x as f64
    }
}

impl Scalar for BigRational {
    fn negligible(&self) -> bool {
        self.is_zero()
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn from_i64(x: i64) -> Self {
        BigRational::from_integer(BigInt::from(x))
    }
}

pub fn rational(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// Exact binary expansion of a finite float.
pub fn rational_from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

pub type Mat<T> = Vec<Vec<T>>;

/// In-place reduced row echelon form. Returns pivot columns.
///
/// Partial pivoting on the largest magnitude; for floats, entries below the
/// zero test are treated as zero.
pub fn rref<T: Scalar>(m: &mut Mat<T>) -> Vec<usize> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let mut best = r;
        for i in r + 1..rows {
            if m[i][c].abs() > m[best][c].abs() {
                best = i;
            }
        }
        if m[best][c].negligible() {
            for row in m.iter_mut().skip(r) {
                row[c] = T::zero();
            }
            continue;
        }
        m.swap(r, best);
        let p = m[r][c].clone();
        for x in m[r].iter_mut() {
            *x = x.clone() / p.clone();
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let v = m[r][j].clone() * f.clone();
                    m[i][j] = m[i][j].clone() - v;
                }
                m[i][c] = T::zero();
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank<T: Scalar>(m: &Mat<T>) -> usize {
    let mut w = m.clone();
    rref(&mut w).len()
}

/// Kernel basis from the RREF: one vector per free column, with a 1 in that
/// column.
pub fn nullspace<T: Scalar>(m: &Mat<T>, cols: usize) -> Vec<Vec<T>> {
    let mut w = m.clone();
    let pivots = rref(&mut w);
    let mut basis = Vec::new();
    for free in (0..cols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![T::zero(); cols];
        v[free] = T::one();
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = -w[r][free].clone();
        }
        basis.push(v);
    }
    basis
}

/// Solve a square system; `None` when singular under the zero test.
pub fn solve<T: Scalar>(a: &Mat<T>, b: &[T]) -> Option<Vec<T>> {
    let n = a.len();
    let mut aug: Mat<T> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.len() != n || pivots.iter().any(|&p| p >= n) {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n].clone()).collect())
}

pub fn det<T: Scalar>(a: &Mat<T>) -> T {
    let n = a.len();
    let mut m = a.clone();
    let mut d = T::one();
    for c in 0..n {
        let mut best = c;
        for i in c + 1..n {
            if m[i][c].abs() > m[best][c].abs() {
                best = i;
            }
        }
        if m[best][c].is_zero() {
            return T::zero();
        }
        if best != c {
            m.swap(best, c);
            d = -d;
        }
        let p = m[c][c].clone();
        d = d * p.clone();
        for i in c + 1..n {
            let f = m[i][c].clone() / p.clone();
            if f.is_zero() {
                continue;
            }
            for j in c..n {
                let v = m[c][j].clone() * f.clone();
                m[i][j] = m[i][j].clone() - v;
            }
        }
    }
    d
}

pub fn to_f64_mat<T: Scalar>(m: &Mat<T>) -> Mat<f64> {
    m.iter().map(|r| r.iter().map(Scalar::to_f64).collect()).collect()
}

pub fn transpose<T: Clone>(m: &Mat<T>, cols: usize) -> Mat<T> {
    (0..cols).map(|j| m.iter().map(|r| r[j].clone()).collect()).collect()
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

pub fn is_one<T: Scalar>(x: &T) -> bool {
    (x.clone() - T::one()).negligible()
}
