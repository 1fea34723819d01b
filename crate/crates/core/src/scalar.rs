use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar the geometry and quality code is written against.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Euclidean distance between two equal-length points.
#[inline]
pub fn euclidean<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .fold(T::zero(), |acc, v| acc + v)
        .sqrt()
}

/// Population mean and standard deviation (two-pass).
pub(crate) fn mean_std<T: Scalar>(values: &[T]) -> (T, T) {
    if values.is_empty() {
        return (T::zero(), T::zero());
    }
    let n = T::from_count(values.len());
    let mean = values.iter().copied().sum::<T>() / n;
    let var = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
    (mean, var.sqrt())
}

pub(crate) fn median<T: Scalar>(values: &[T]) -> T {
    if values.is_empty() {
        return T::zero();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / T::lit(2.0)
    }
}

/// `n^(1/3)` as a real-valued bound.
#[inline]
pub(crate) fn cube_root_of_count(n: usize) -> f64 {
    (n as f64).cbrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_is_population() {
        let (m, s) = mean_std(&[1.0_f64, 1.0, 4.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0_f64, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0_f64, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn cube_root_exact_on_cubes() {
        assert_eq!(cube_root_of_count(8), 2.0);
        assert_eq!(cube_root_of_count(27), 3.0);
        assert_eq!(cube_root_of_count(1000), 10.0);
    }
}
