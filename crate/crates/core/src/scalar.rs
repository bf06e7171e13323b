//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real field the modal machinery is generic over: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + NumAssign + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub type Cx<T> = Complex<T>;

#[inline]
pub(crate) fn cx<T: Scalar>(re: T, im: T) -> Cx<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn czero<T: Scalar>() -> Cx<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub(crate) fn cone<T: Scalar>() -> Cx<T> {
    Complex::new(T::one(), T::zero())
}

/// `(e^{t·lambda} − 1)/lambda`, continuous through `lambda = 0` (value `t`).
pub fn phi1<T: Scalar>(t: T, lambda: Cx<T>) -> Cx<T> {
    let z = lambda.scale(t);
    if z.norm() < T::lit(1e-3) {
        // Taylor series of (e^z − 1)/z, truncated where the next term is below eps.
        let mut term = cone::<T>();
        let mut acc = cone::<T>();
        for k in 2..12 {
            term = term * z / T::lit(k as f64);
            acc += term;
        }
        acc.scale(t)
    } else {
        (z.exp() - cone::<T>()) / lambda
    }
}

/// Pole proximity test shared by every resolvent-type evaluation.
#[inline]
pub(crate) fn near_pole<T: Scalar>(point: Cx<T>, pole: Cx<T>) -> bool {
    (point - pole).norm() < T::lit(crate::POLE_REL_TOL) * (T::one() + pole.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi1_matches_closed_form_away_from_zero() {
        let lam = cx(-1.0f64, 5.0);
        let t = 0.1;
        let direct = ((lam * t).exp() - 1.0) / lam;
        assert!((phi1(t, lam) - direct).norm() < 1e-15);
    }

    #[test]
    fn phi1_series_branch_is_continuous() {
        let t = 2.0f64;
        let lam = cx(4.0e-4, -3.0e-4);
        let series = phi1(t, lam);
        let z = lam * t;
        // exp via high-order expansion evaluated independently
        let mut e = cone::<f64>();
        let mut term = cone::<f64>();
        for k in 1..30 {
            term = term * z / k as f64;
            e += term;
        }
        let reference = (e - 1.0) / lam;
        assert!((series - reference).norm() < 1e-14);
        assert_eq!(phi1(t, czero()), cx(2.0, 0.0));
    }
}
