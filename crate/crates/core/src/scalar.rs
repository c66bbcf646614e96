//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real field the solver is generic over: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Infallible for the implementing types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite real converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Neumaier-compensated sum; used wherever mass or L¹ totals are reported.
pub fn compensated_sum<T: Real, I: IntoIterator<Item = T>>(values: I) -> T {
    let mut sum = T::zero();
    let mut carry = T::zero();
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            carry = carry + ((sum - t) + x);
        } else {
            carry = carry + ((x - t) + sum);
        }
        sum = t;
    }
    sum + carry
}

pub(crate) type Vec3<T> = [T; 3];

#[inline]
pub(crate) fn dot<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn cross<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub(crate) fn norm<T: Real>(a: &Vec3<T>) -> T {
    dot(a, a).sqrt()
}

#[inline]
pub(crate) fn scale<T: Real>(a: &Vec3<T>, s: T) -> Vec3<T> {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub(crate) fn add<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub(crate) fn sub<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn neg<T: Real>(a: &Vec3<T>) -> Vec3<T> {
    [-a[0], -a[1], -a[2]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancelled_terms() {
        let xs = [1.0e16_f64, 1.0, -1.0e16, 1.0];
        assert_eq!(compensated_sum(xs), 2.0);
        assert_eq!(compensated_sum(Vec::<f32>::new()), 0.0);
    }

    #[test]
    fn vector_helpers() {
        let x = [1.0_f64, 0.0, 0.0];
        let y = [0.0_f64, 1.0, 0.0];
        assert_eq!(cross(&x, &y), [0.0, 0.0, 1.0]);
        assert_eq!(dot(&x, &y), 0.0);
        assert_eq!(norm(&add(&x, &y)), 2.0_f64.sqrt());
        assert_eq!(sub(&x, &x), [0.0; 3]);
        assert_eq!(neg(&scale(&x, 2.0)), [-2.0, 0.0, 0.0]);
    }
}
