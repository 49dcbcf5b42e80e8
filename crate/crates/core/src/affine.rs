use alloc::vec::Vec;

use num_rational::BigRational;

use crate::scalar::{dot, Scalar};

/// `L(μ) = a0 + ⟨a, μ⟩` on the affine chart ℝ^m.
///
/// The linear part `a` is the inward normal of the facet `{L = 0}`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineFunction<T = f64> {
    pub a0: T,
    pub a: Vec<T>,
}

impl<T: Scalar> AffineFunction<T> {
    pub fn new(a0: T, a: Vec<T>) -> Self {
        Self { a0, a }
    }

    pub fn constant(c: T, m: usize) -> Self {
        Self { a0: c, a: alloc::vec![T::zero(); m] }
    }

    /// The coordinate function μ_i.
    pub fn coordinate(i: usize, m: usize) -> Self {
        let mut f = Self::constant(T::zero(), m);
        f.a[i] = T::one();
        f
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn eval(&self, mu: &[T]) -> T {
        self.a0.clone() + dot(&self.a, mu)
    }

    pub fn scale(&self, t: &T) -> Self {
        Self { a0: self.a0.clone() * t.clone(), a: self.a.iter().map(|x| x.clone() * t.clone()).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { a0: self.a0.clone() + other.a0.clone(), a: self.a.iter().zip(&other.a).map(|(x, y)| x.clone() + y.clone()).collect() }
    }

    pub fn neg(&self) -> Self {
        self.scale(&-T::one())
    }

    /// Coefficients as an element of h ≅ ℝ^{m+1}, constant term first.
    pub fn to_vector(&self) -> Vec<T> {
        core::iter::once(self.a0.clone()).chain(self.a.iter().cloned()).collect()
    }

    pub fn from_vector(v: &[T]) -> Self {
        Self { a0: v[0].clone(), a: v[1..].to_vec() }
    }

    pub fn to_f64(&self) -> AffineFunction<f64> {
        AffineFunction { a0: self.a0.to_f64(), a: self.a.iter().map(Scalar::to_f64).collect() }
    }

    pub fn is_zero_function(&self) -> bool {
        self.a0.negligible() && self.a.iter().all(Scalar::negligible)
    }
}

impl AffineFunction<f64> {
    pub fn normal_norm(&self) -> f64 {
        libm::sqrt(self.a.iter().map(|x| x * x).sum())
    }

    /// Euclidean distance from μ to the hyperplane `{L = 0}`.
    pub fn distance(&self, mu: &[f64]) -> f64 {
        self.eval(mu) / self.normal_norm()
    }
}

impl AffineFunction<BigRational> {
    pub fn from_ints(a0: i64, a: &[i64]) -> Self {
        Self { a0: BigRational::from_i64(a0), a: a.iter().map(|&x| BigRational::from_i64(x)).collect() }
    }
}

/// Sum of a family of affine functions (the zero function for an empty family).
pub fn sum<T: Scalar>(fs: &[AffineFunction<T>], m: usize) -> AffineFunction<T> {
    fs.iter().fold(AffineFunction::constant(T::zero(), m), |acc, f| acc.add(f))
}
