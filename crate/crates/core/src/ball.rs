//! Granular-ball geometry.

use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::scalar::{euclidean, Scalar};

/// A subset of instances summarized by its centroid and radii.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GranularBall<T> {
    members: Vec<usize>,
    center: Vec<T>,
    avg_radius: T,
    max_radius: T,
    coverage: usize,
}

impl<T: Scalar> GranularBall<T> {
    /// Sorted, duplicate-free instance indices.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_singleton(&self) -> bool {
        self.members.len() == 1
    }

    pub fn center(&self) -> &[T] {
        &self.center
    }

    pub fn avg_radius(&self) -> T {
        self.avg_radius
    }

    pub fn max_radius(&self) -> T {
        self.max_radius
    }

    /// Members no farther than the average radius from the center.
    pub fn coverage(&self) -> usize {
        self.coverage
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }
}

#[cfg(test)]
impl<T: Scalar> GranularBall<T> {
    pub(crate) fn set_radii_for_test(&mut self, avg: T, max: T) {
        self.avg_radius = avg;
        self.max_radius = max;
    }
}

/// Builds the ball of `members`: centroid, mean and max member-to-center distance.
pub fn make_ball<T: Scalar>(d: &Dataset<T>, mut members: Vec<usize>) -> Result<GranularBall<T>> {
    if members.is_empty() {
        return Err(Error::EmptyBall);
    }
    members.sort_unstable();
    if let Some(&bad) = members.iter().find(|&&i| i >= d.n()) {
        return Err(Error::IndexOutOfRange { index: bad, n: d.n() });
    }
    if members.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidParameter("duplicate member index".into()));
    }

    let m = d.m();
    let count = T::from_count(members.len());
    let mut center = vec![T::zero(); m];
    for &i in &members {
        for (c, &x) in center.iter_mut().zip(d.row(i)) {
            *c = *c + x;
        }
    }
    for c in &mut center {
        *c = *c / count;
    }

    let dists: Vec<T> = members.iter().map(|&i| euclidean(d.row(i), &center)).collect();
    let (avg_radius, max_radius) = if members.len() == 1 {
        (T::zero(), T::zero())
    } else {
        let avg = dists.iter().copied().sum::<T>() / count;
        let max = dists.iter().copied().fold(T::zero(), T::max);
        // Rounding can push the mean a hair above the max for near-equal distances.
        (avg.min(max), max)
    };
    let coverage = dists.iter().filter(|&&r| within_radius(r, avg_radius)).count();

    Ok(GranularBall {
        members,
        center,
        avg_radius,
        max_radius,
        coverage,
    })
}

/// `r <= radius`, allowing a few ulps so members that sit exactly on the
/// average radius (two-point balls, symmetric configurations) are counted.
#[inline]
pub(crate) fn within_radius<T: Scalar>(r: T, radius: T) -> bool {
    r <= radius + radius * T::epsilon() * T::lit(8.0)
}

/// Two-division of a ball around its two extreme members.
///
/// The first pole is the member farthest from the center, the second the
/// member farthest from the first pole (ties go to the lower index). Members
/// no farther from the first pole than from the second go left. Returns
/// `Ok(None)` when every member coincides and no split is possible.
pub fn split_ball<T: Scalar>(
    d: &Dataset<T>,
    ball: &GranularBall<T>,
) -> Result<Option<(GranularBall<T>, GranularBall<T>)>> {
    if ball.len() < 2 {
        return Err(Error::SingletonSplit);
    }
    let members = ball.members();
    let farthest_from = |p: &[T]| -> usize {
        let mut best = members[0];
        let mut best_d = euclidean(d.row(best), p);
        for &i in &members[1..] {
            let di = euclidean(d.row(i), p);
            if di > best_d {
                best = i;
                best_d = di;
            }
        }
        best
    };
    let alpha = farthest_from(ball.center());
    let beta = farthest_from(d.row(alpha));

    let (pa, pb) = (d.row(alpha), d.row(beta));
    let (left, right): (Vec<usize>, Vec<usize>) = members
        .iter()
        .partition(|&&i| euclidean(d.row(i), pa) <= euclidean(d.row(i), pb));
    if left.is_empty() || right.is_empty() {
        return Ok(None);
    }
    Ok(Some((make_ball(d, left)?, make_ball(d, right)?)))
}

/// Gap between two balls: center distance minus both average radii, floored at zero.
pub fn ball_distance<T: Scalar>(a: &GranularBall<T>, b: &GranularBall<T>) -> Result<T> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(gap(a, b))
}

#[inline]
pub(crate) fn gap<T: Scalar>(a: &GranularBall<T>, b: &GranularBall<T>) -> T {
    let centers = euclidean(a.center(), b.center());
    (centers - (a.avg_radius + b.avg_radius)).max(T::zero())
}

/// Size over `R_ave * R_max^2`; undefined for zero radii.
pub fn gbdpc_density<T: Scalar>(ball: &GranularBall<T>) -> Result<T> {
    if ball.avg_radius <= T::zero() || ball.max_radius <= T::zero() {
        return Err(Error::ZeroRadius);
    }
    Ok(T::from_count(ball.len()) / (ball.avg_radius * ball.max_radius * ball.max_radius))
}
