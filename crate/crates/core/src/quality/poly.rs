//! Real roots of polynomials of degree at most three and the region of
//! `[0, +inf)` where such a polynomial is strictly positive.
//!
//! Coefficients are ascending: `c[0] + c[1] x + c[2] x^2 + c[3] x^3`.

use super::interval::{Interval, IntervalSet};
use crate::scalar::Scalar;

pub fn eval<T: Scalar>(coeffs: &[T], x: T) -> T {
    coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * x + c)
}

fn derivative<T: Scalar>(coeffs: &[T]) -> Vec<T> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * T::from_count(k))
        .collect()
}

/// Product of two ascending-coefficient polynomials.
pub fn mul<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![T::zero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = out[i + j] + x * y;
        }
    }
    out
}

pub fn add_scaled<T: Scalar>(acc: &mut Vec<T>, p: &[T], scale: T) {
    if acc.len() < p.len() {
        acc.resize(p.len(), T::zero());
    }
    for (a, &c) in acc.iter_mut().zip(p) {
        *a = *a + scale * c;
    }
}

fn trim<T: Scalar>(coeffs: &[T]) -> &[T] {
    let mut len = coeffs.len();
    while len > 0 && coeffs[len - 1] == T::zero() {
        len -= 1;
    }
    &coeffs[..len]
}

fn quadratic_roots<T: Scalar>(c: T, b: T, a: T) -> Vec<T> {
    let two = T::lit(2.0);
    let disc = b * b - T::lit(4.0) * a * c;
    if disc < T::zero() {
        return Vec::new();
    }
    if disc == T::zero() {
        return vec![-b / (two * a)];
    }
    let q = -(b + b.signum() * disc.sqrt()) / two;
    vec![q / a, c / q]
}

/// One real root of a monic cubic `x^3 + a x^2 + b x + c`.
fn cubic_real_root<T: Scalar>(a: T, b: T, c: T) -> T {
    let three = T::lit(3.0);
    let nine = T::lit(9.0);
    let q = (a * a - three * b) / nine;
    let r = (T::lit(2.0) * a * a * a - nine * a * b + T::lit(27.0) * c) / T::lit(54.0);
    let q3 = q * q * q;
    if r * r < q3 {
        let theta = (r / q3.sqrt()).max(-T::one()).min(T::one()).acos();
        -T::lit(2.0) * q.sqrt() * (theta / three).cos() - a / three
    } else {
        let big = -r.signum() * (r.abs() + (r * r - q3).sqrt()).cbrt();
        let small = if big == T::zero() { T::zero() } else { q / big };
        big + small - a / three
    }
}

fn polish<T: Scalar>(coeffs: &[T], deriv: &[T], mut x: T) -> T {
    let mut fx = eval(coeffs, x).abs();
    for _ in 0..32 {
        if fx == T::zero() {
            break;
        }
        let d = eval(deriv, x);
        if d == T::zero() {
            break;
        }
        let next = x - eval(coeffs, x) / d;
        let fn_ = eval(coeffs, next).abs();
        if fn_.is_nan() || fn_ >= fx {
            break;
        }
        x = next;
        fx = fn_;
    }
    x
}

/// All real roots (with possible repeats), sorted ascending.
///
/// Roots come from closed forms (deflating the cubic by one real root) and
/// are then refined by Newton steps on the original polynomial.
pub fn real_roots<T: Scalar>(coeffs: &[T]) -> Vec<T> {
    let p = trim(coeffs);
    let mut roots = match p.len() {
        0 | 1 => Vec::new(),
        2 => vec![-p[0] / p[1]],
        3 => quadratic_roots(p[0], p[1], p[2]),
        4 => {
            let (a, b, c) = (p[2] / p[3], p[1] / p[3], p[0] / p[3]);
            let r = polish(p, &derivative(p), cubic_real_root(a, b, c));
            // Deflate: x^3 + a x^2 + b x + c = (x - r)(x^2 + e x + f)
            let e = a + r;
            let f = b + r * e;
            let mut out = quadratic_roots(f, e, T::one());
            out.push(r);
            out
        }
        _ => panic!("polynomial degree above three"),
    };
    if p.len() >= 3 {
        let d = derivative(p);
        for r in &mut roots {
            *r = polish(p, &d, *r);
        }
    }
    roots.retain(|r| r.is_finite());
    roots.sort_by(|a, b| a.partial_cmp(b).expect("finite root"));
    roots
}

/// Region of `[0, +inf)` where the polynomial is strictly positive.
///
/// Sign on each stretch between consecutive non-negative roots is read at
/// the midpoint; the unbounded stretch is probed beyond the largest root.
/// Stretches of equal sign on both sides of a root are joined, so a root of
/// even multiplicity does not puncture the set.
pub fn solve_sign_region<T: Scalar>(coeffs: &[T]) -> IntervalSet<T> {
    let p = trim(coeffs);
    if p.is_empty() {
        return IntervalSet::empty();
    }
    let mut cuts: Vec<T> = real_roots(p).into_iter().filter(|&r| r > T::zero()).collect();
    cuts.dedup();

    let two = T::lit(2.0);
    let zero_positive = eval(p, T::zero()) > T::zero();
    let mut bounds = Vec::with_capacity(cuts.len() + 2);
    bounds.push(T::zero());
    bounds.extend(cuts.iter().copied());
    bounds.push(T::infinity());

    let mut pieces: Vec<Interval<T>> = Vec::new();
    let mut open_piece: Option<Interval<T>> = None;
    for w in bounds.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let probe = if hi.is_finite() {
            lo + (hi - lo) / two
        } else {
            lo + T::one().max(lo.abs())
        };
        let positive = eval(p, probe) > T::zero();
        match (&mut open_piece, positive) {
            (Some(cur), true) => cur.hi = hi,
            (None, true) => {
                let lo_closed = lo == T::zero() && zero_positive;
                open_piece = Some(Interval::new(lo, lo_closed, hi, false));
            }
            (Some(_), false) => pieces.push(open_piece.take().expect("open piece")),
            (None, false) => {}
        }
    }
    pieces.extend(open_piece);
    IntervalSet::from_intervals(pieces)
}

#[cfg(test)]
mod tests {
    use super::*;

    type I = Interval<f64>;
    const INF: f64 = f64::INFINITY;

    #[test]
    fn factored_quadratic() {
        // (x - 1)(x - 3) = 3 - 4x + x^2
        let s = solve_sign_region(&[3.0, -4.0, 1.0]);
        assert_eq!(s.intervals(), &[I::closed_open(0.0, 1.0), I::open(3.0, INF)]);
    }

    #[test]
    fn constants() {
        assert_eq!(solve_sign_region(&[5.0]).intervals(), &[I::closed_open(0.0, INF)]);
        assert!(solve_sign_region(&[-5.0]).is_empty());
        assert!(solve_sign_region(&[0.0, 0.0, 0.0, 0.0]).is_empty());
        assert!(solve_sign_region::<f64>(&[]).is_empty());
    }

    #[test]
    fn cube_has_open_zero() {
        let s = solve_sign_region(&[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(s.intervals(), &[I::open(0.0, INF)]);
    }

    #[test]
    fn double_root_is_not_a_puncture() {
        // (x - 2)^2 (x + 1) = 4 + 0x - 3x^2 + x^3
        let s = solve_sign_region(&[4.0, 0.0, -3.0, 1.0]);
        assert_eq!(s.intervals().len(), 1);
        assert_eq!(s.intervals()[0].lo, 0.0);
        assert!(s.intervals()[0].lo_closed);
        assert_eq!(s.intervals()[0].hi, INF);
    }

    #[test]
    fn three_positive_roots() {
        // -(x-1)(x-2)(x-4): positive on [0,1) and (2,4).
        let c = mul(&mul(&[-1.0, 1.0], &[-2.0, 1.0]), &[-4.0, 1.0]);
        let neg: Vec<f64> = c.iter().map(|v| -v).collect();
        let s = solve_sign_region(&neg);
        let got = s.intervals();
        assert_eq!(got.len(), 2);
        assert!(got[0].lo == 0.0 && got[0].lo_closed && (got[0].hi - 1.0).abs() < 1e-12);
        assert!(!got[1].lo_closed && (got[1].lo - 2.0).abs() < 1e-12 && (got[1].hi - 4.0).abs() < 1e-12);
        let roots: Vec<f64> = real_roots(&c);
        for (r, e) in roots.iter().zip([1.0, 2.0, 4.0]) {
            assert!((r - e).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_with_negative_root() {
        assert_eq!(solve_sign_region(&[1.0, 2.0]).intervals(), &[I::closed_open(0.0, INF)]);
        assert_eq!(solve_sign_region(&[-1.0, 2.0]).intervals(), &[I::open(0.5, INF)]);
    }

    #[test]
    fn single_real_root_cubic() {
        // (x - 3)(x^2 + 1)
        let c = mul(&[-3.0, 1.0], &[1.0, 0.0, 1.0]);
        let r: Vec<f64> = real_roots(&c);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn works_for_f32() {
        let s = solve_sign_region(&[3.0f32, -4.0, 1.0]);
        assert_eq!(s.intervals().len(), 2);
        assert!((s.intervals()[1].lo - 3.0).abs() < 1e-5);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn roots_of_factored_cubic(r1 in -10.0..10.0f64, r2 in -10.0..10.0f64, r3 in -10.0..10.0f64, lead in 0.1..5.0f64) {
                let c = mul(&mul(&[-r1 * lead, lead], &[-r2, 1.0]), &[-r3, 1.0]);
                let mut expected = [r1, r2, r3];
                expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let tight = (expected[1] - expected[0]).abs().min((expected[2] - expected[1]).abs());
                prop_assume!(tight > 1e-3);
                let got = real_roots(&c);
                prop_assert_eq!(got.len(), 3);
                for (g, e) in got.iter().zip(expected) {
                    prop_assert!((g - e).abs() < 1e-9, "{} vs {}", g, e);
                }
            }

            #[test]
            fn sign_region_matches_direct_sign(c in prop::collection::vec(-10.0..10.0f64, 1..5)) {
                let s = solve_sign_region(&c);
                let roots: Vec<f64> = real_roots(&c);
                for k in 0..400 {
                    let x = k as f64 * 0.05;
                    if roots.iter().any(|r| (r - x).abs() < 1e-6) {
                        continue;
                    }
                    prop_assert_eq!(s.contains(x), eval(&c, x) > 0.0, "x = {}", x);
                }
            }
        }
    }
}
