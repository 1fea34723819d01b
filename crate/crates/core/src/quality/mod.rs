//! Ball quality and the adaptive granularity level.
//!
//! Quality is coverage times specificity. Coverage counts members within the
//! average radius; specificity decays with the average radius at a rate set
//! by the granularity level `gamma`. The level is not a user parameter: each
//! division that looks non-spherical contributes the set of `gamma` values for
//! which splitting beats keeping the parent, and these sets are intersected.

mod interval;
pub mod poly;

pub use interval::{finalize_gamma, FinalGamma, Interval, IntervalSet};
pub use poly::solve_sign_region;

use serde::{Deserialize, Serialize};

use crate::ball::{within_radius, GranularBall};
use crate::dataset::Dataset;
use crate::scalar::{cube_root_of_count, euclidean, Scalar};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecificityForm {
    /// `1 / (1 + gamma * r)`
    #[default]
    Reciprocal,
    /// `exp(-gamma * r)`
    Exponential,
}

/// Which radius enters the division-gain inequality.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusChoice {
    #[default]
    Avg,
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityConfig<T> {
    pub gamma: T,
    pub specificity_form: SpecificityForm,
    pub radius_for_adaptation: RadiusChoice,
}

impl<T: Scalar> Default for QualityConfig<T> {
    fn default() -> Self {
        Self {
            gamma: T::zero(),
            specificity_form: SpecificityForm::Reciprocal,
            radius_for_adaptation: RadiusChoice::Avg,
        }
    }
}

impl<T: Scalar> QualityConfig<T> {
    pub fn with_gamma(gamma: T) -> Self {
        Self {
            gamma,
            ..Self::default()
        }
    }

    pub fn specificity(&self, radius: T) -> T {
        match self.specificity_form {
            SpecificityForm::Reciprocal => T::one() / (T::one() + self.gamma * radius),
            SpecificityForm::Exponential => (-self.gamma * radius).exp(),
        }
    }

    fn adaptation_radius(&self, ball: &GranularBall<T>) -> T {
        match self.radius_for_adaptation {
            RadiusChoice::Avg => ball.avg_radius(),
            RadiusChoice::Max => ball.max_radius(),
        }
    }
}

/// Members within the average radius of the center (inclusive).
pub fn coverage<T: Scalar>(d: &Dataset<T>, ball: &GranularBall<T>) -> usize {
    ball.members()
        .iter()
        .filter(|&&i| within_radius(euclidean(d.row(i), ball.center()), ball.avg_radius()))
        .count()
}

/// Coverage times specificity. Uses the coverage cached on the ball.
pub fn quality<T: Scalar>(ball: &GranularBall<T>, cfg: &QualityConfig<T>) -> T {
    T::from_count(ball.coverage()) * cfg.specificity(ball.avg_radius())
}

pub fn penalized_quality<T: Scalar>(ball: &GranularBall<T>, cfg: &QualityConfig<T>, lambda: T) -> T {
    quality(ball, cfg) - lambda
}

const DISPERSION_CV: f64 = 0.1;
const CORRELATION: f64 = 0.3;

/// Whether a ball is large enough and far enough from spherical to constrain
/// the granularity level: at least `n^(1/3)` members, and either the per-feature
/// variances vary (coefficient of variation above 0.1) or some feature pair is
/// correlated (absolute Pearson coefficient above 0.3).
pub fn adjustment_criterion<T: Scalar>(d: &Dataset<T>, ball: &GranularBall<T>, n: usize) -> bool {
    if (ball.len() as f64) < cube_root_of_count(n) {
        return false;
    }
    let m = d.m();
    let size = T::from_count(ball.len());
    let center = ball.center();

    // Population covariance of the members.
    let mut cov = vec![T::zero(); m * m];
    for &i in ball.members() {
        let x = d.row(i);
        for a in 0..m {
            let da = x[a] - center[a];
            for b in a..m {
                cov[a * m + b] = cov[a * m + b] + da * (x[b] - center[b]);
            }
        }
    }
    for v in &mut cov {
        *v = *v / size;
    }
    let variances: Vec<T> = (0..m).map(|a| cov[a * m + a]).collect();

    let (mean_var, std_var) = crate::scalar::mean_std(&variances);
    let cv = if mean_var > T::zero() {
        std_var / mean_var
    } else {
        T::zero()
    };
    if cv > T::lit(DISPERSION_CV) {
        return true;
    }

    let mut max_corr = T::zero();
    for a in 0..m {
        for b in (a + 1)..m {
            let denom = (variances[a] * variances[b]).sqrt();
            if denom > T::zero() {
                max_corr = max_corr.max((cov[a * m + b] / denom).abs());
            }
        }
    }
    max_corr > T::lit(CORRELATION)
}

/// Polynomial whose positive region on `gamma >= 0` is where splitting
/// `parent` into `left` and `right` raises penalized quality:
///
/// `Cl/(1+g rl) + Cr/(1+g rr) - lambda - Cp/(1+g rp) > 0`
///
/// multiplied through by the (positive) product of the three denominators.
pub fn division_gain_polynomial<T: Scalar>(
    parent: &GranularBall<T>,
    left: &GranularBall<T>,
    right: &GranularBall<T>,
    lambda: T,
    cfg: &QualityConfig<T>,
) -> Vec<T> {
    let one = T::one();
    let lin = |b: &GranularBall<T>| [one, cfg.adaptation_radius(b)];
    let (dl, dr, dp) = (lin(left), lin(right), lin(parent));
    let cov = |b: &GranularBall<T>| T::from_count(b.coverage());

    let mut acc = Vec::new();
    poly::add_scaled(&mut acc, &poly::mul(&dr, &dp), cov(left));
    poly::add_scaled(&mut acc, &poly::mul(&dl, &dp), cov(right));
    poly::add_scaled(&mut acc, &poly::mul(&poly::mul(&dl, &dr), &dp), -lambda);
    poly::add_scaled(&mut acc, &poly::mul(&dl, &dr), -cov(parent));
    acc
}

/// Set of granularity levels for which the division pays off.
pub fn division_gain_interval<T: Scalar>(
    parent: &GranularBall<T>,
    left: &GranularBall<T>,
    right: &GranularBall<T>,
    lambda: T,
    cfg: &QualityConfig<T>,
) -> IntervalSet<T> {
    solve_sign_region(&division_gain_polynomial(parent, left, right, lambda, cfg))
}
