//! States in modal coordinates.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::{czero, Cx, Scalar};

/// State expressed through its modal coefficients `x_n = <x, psi_n>`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVec<T: Scalar> {
    coeffs: Vec<Cx<T>>,
}

impl<T: Scalar> StateVec<T> {
    pub fn new(coeffs: Vec<Cx<T>>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(n: usize) -> Self {
        Self { coeffs: vec![czero(); n] }
    }

    pub fn from_real(values: &[T]) -> Self {
        Self { coeffs: values.iter().map(|&v| Cx::new(v, T::zero())).collect() }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[Cx<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Cx<T>] {
        &mut self.coeffs
    }

    pub fn into_inner(self) -> Vec<Cx<T>> {
        self.coeffs
    }

    /// Coordinate l2 norm, accumulated in ascending mode order.
    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn norm_sqr(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |acc, c| acc + c.norm_sqr())
    }

    pub fn scale(&self, c: Cx<T>) -> Self {
        Self { coeffs: self.coeffs.iter().map(|&x| x * c).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub(crate) fn check_len(&self, expected: usize) -> Result<()> {
        if self.coeffs.len() == expected {
            Ok(())
        } else {
            Err(Error::LengthMismatch { expected, got: self.coeffs.len() })
        }
    }

    /// Max-norm distance to another state of the same length.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).norm()))
    }
}

impl<T: Scalar> Index<usize> for StateVec<T> {
    type Output = Cx<T>;
    fn index(&self, i: usize) -> &Cx<T> {
        &self.coeffs[i]
    }
}

impl<T: Scalar> IndexMut<usize> for StateVec<T> {
    fn index_mut(&mut self, i: usize) -> &mut Cx<T> {
        &mut self.coeffs[i]
    }
}

impl<T: Scalar> From<Vec<Cx<T>>> for StateVec<T> {
    fn from(coeffs: Vec<Cx<T>>) -> Self {
        Self::new(coeffs)
    }
}
