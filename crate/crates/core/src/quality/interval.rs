use std::fmt;

use serde::Serialize;

use crate::scalar::Scalar;

/// One sub-interval of `[0, +inf)`; `hi` may be infinite (and is then open).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval<T> {
    pub lo: T,
    pub lo_closed: bool,
    pub hi: T,
    pub hi_closed: bool,
}

impl<T: Scalar> Interval<T> {
    pub fn new(lo: T, lo_closed: bool, hi: T, hi_closed: bool) -> Self {
        Self {
            lo,
            lo_closed,
            hi,
            hi_closed: hi_closed && hi.is_finite(),
        }
    }

    pub fn closed_open(lo: T, hi: T) -> Self {
        Self::new(lo, true, hi, false)
    }

    pub fn open(lo: T, hi: T) -> Self {
        Self::new(lo, false, hi, false)
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    pub fn contains(&self, x: T) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    pub fn length(&self) -> T {
        self.hi - self.lo
    }

    fn intersect(&self, other: &Self) -> Self {
        let (lo, lo_closed) = if self.lo > other.lo {
            (self.lo, self.lo_closed)
        } else if other.lo > self.lo {
            (other.lo, other.lo_closed)
        } else {
            (self.lo, self.lo_closed && other.lo_closed)
        };
        let (hi, hi_closed) = if self.hi < other.hi {
            (self.hi, self.hi_closed)
        } else if other.hi < self.hi {
            (other.hi, other.hi_closed)
        } else {
            (self.hi, self.hi_closed && other.hi_closed)
        };
        Self::new(lo, lo_closed, hi, hi_closed)
    }
}

impl<T: Scalar> fmt::Display for Interval<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lo_closed { '[' } else { '(' };
        let r = if self.hi_closed { ']' } else { ')' };
        write!(f, "{l}{}, {}{r}", self.lo, self.hi)
    }
}

/// Finite union of disjoint, non-adjacent intervals in `[0, +inf)`, sorted.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntervalSet<T> {
    intervals: Vec<Interval<T>>,
}

impl<T: Scalar> IntervalSet<T> {
    pub fn empty() -> Self {
        Self { intervals: Vec::new() }
    }

    /// `[0, +inf)`.
    pub fn nonnegative() -> Self {
        Self {
            intervals: vec![Interval::closed_open(T::zero(), T::infinity())],
        }
    }

    /// Normalizes arbitrary intervals: clips to `[0, +inf)`, drops empties,
    /// sorts and merges overlapping or touching pieces.
    pub fn from_intervals(raw: impl IntoIterator<Item = Interval<T>>) -> Self {
        let mut pieces: Vec<Interval<T>> = raw
            .into_iter()
            .map(|iv| {
                if iv.lo < T::zero() {
                    Interval::new(T::zero(), true, iv.hi, iv.hi_closed)
                } else {
                    iv
                }
            })
            .filter(|iv| !iv.is_empty())
            .collect();
        pieces.sort_by(|a, b| {
            a.lo.partial_cmp(&b.lo)
                .expect("finite bound")
                .then(b.lo_closed.cmp(&a.lo_closed))
        });
        let mut out: Vec<Interval<T>> = Vec::with_capacity(pieces.len());
        for iv in pieces {
            if let Some(last) = out.last_mut() {
                let joins = iv.lo < last.hi || (iv.lo == last.hi && (iv.lo_closed || last.hi_closed));
                if joins {
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                        last.hi_closed = iv.hi_closed;
                    } else if iv.hi == last.hi {
                        last.hi_closed |= iv.hi_closed;
                    }
                    continue;
                }
            }
            out.push(iv);
        }
        Self { intervals: out }
    }

    pub fn intervals(&self) -> &[Interval<T>] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, x: T) -> bool {
        self.intervals.iter().any(|iv| iv.contains(x))
    }

    pub fn infimum(&self) -> Option<T> {
        self.intervals.first().map(|iv| iv.lo)
    }

    /// Exact set intersection.
    pub fn intersect(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() && j < other.intervals.len() {
            let (a, b) = (&self.intervals[i], &other.intervals[j]);
            let piece = a.intersect(b);
            if !piece.is_empty() {
                out.push(piece);
            }
            // Advance whichever ends first; on a tie the closed end outlasts the open one.
            let a_first = a.hi < b.hi || (a.hi == b.hi && !a.hi_closed);
            if a_first {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self::from_intervals(out)
    }
}

impl<T: Scalar> fmt::Display for IntervalSet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return write!(f, "{{}}");
        }
        for (k, iv) in self.intervals.iter().enumerate() {
            if k > 0 {
                write!(f, " U ")?;
            }
            write!(f, "{iv}")?;
        }
        Ok(())
    }
}

/// Outcome of picking a granularity level from a feasible range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FinalGamma<T> {
    pub gamma: T,
    /// `false` when the range was empty or no step landed inside it.
    pub in_range: bool,
}

const MIN_STEP: f64 = 1e-15;

/// Picks `inf(range) + epsilon`, shrinking the step until it lands inside.
///
/// When the first interval is too thin for any step down to `1e-15`, the
/// next interval is tried with the full step. An empty range yields zero.
pub fn finalize_gamma<T: Scalar>(range: &IntervalSet<T>, epsilon: T) -> FinalGamma<T> {
    if range.is_empty() {
        log::warn!("granularity range is empty; falling back to gamma = 0");
        return FinalGamma {
            gamma: T::zero(),
            in_range: false,
        };
    }
    for iv in range.intervals() {
        let mut step = epsilon;
        while step.as_f64() >= MIN_STEP {
            let g = iv.lo + step;
            if iv.contains(g) {
                return FinalGamma {
                    gamma: g,
                    in_range: true,
                };
            }
            step = step / T::lit(2.0);
        }
        if iv.lo_closed && iv.contains(iv.lo) {
            return FinalGamma {
                gamma: iv.lo,
                in_range: true,
            };
        }
    }
    let first = range.intervals()[0];
    log::warn!("no step landed inside {range}; using inf + epsilon");
    FinalGamma {
        gamma: first.lo + epsilon,
        in_range: false,
    }
}
