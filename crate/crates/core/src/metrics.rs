//! External validity indices: normalized mutual information and adjusted
//! Rand index, both computed from a contingency table.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContingencyTable {
    /// `counts[i][j]`: items in row class `i` and column class `j`.
    pub counts: Vec<Vec<u64>>,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
    pub total: u64,
}

fn class_index<L: Ord + Clone>(labels: &[L]) -> (Vec<usize>, usize) {
    let mut ids = BTreeMap::new();
    for l in labels {
        let next = ids.len();
        ids.entry(l.clone()).or_insert(next);
    }
    (labels.iter().map(|l| ids[l]).collect(), ids.len())
}

/// Cross-tabulates two labelings. Classes are numbered by first appearance.
pub fn contingency<L: Ord + Clone>(a: &[L], b: &[L]) -> Result<ContingencyTable> {
    if a.len() != b.len() {
        return Err(Error::LabelLengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (ia, r) = class_index(a);
    let (ib, s) = class_index(b);
    let mut counts = vec![vec![0u64; s]; r];
    for (&i, &j) in ia.iter().zip(&ib) {
        counts[i][j] += 1;
    }
    let row_sums = counts.iter().map(|row| row.iter().sum()).collect();
    let col_sums = (0..s).map(|j| counts.iter().map(|row| row[j]).sum()).collect();
    Ok(ContingencyTable {
        counts,
        row_sums,
        col_sums,
        total: a.len() as u64,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NmiNormalization {
    #[default]
    Arithmetic,
    Geometric,
    Min,
    Max,
}

impl std::str::FromStr for NmiNormalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "arithmetic" | "mean" => Self::Arithmetic,
            "geometric" | "sqrt" => Self::Geometric,
            "min" => Self::Min,
            "max" => Self::Max,
            other => return Err(Error::InvalidParameter(format!("unknown NMI normalization {other:?}"))),
        })
    }
}

fn entropy(sums: &[u64], n: f64) -> f64 {
    sums.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

impl ContingencyTable {
    pub fn mutual_information(&self) -> f64 {
        let n = self.total as f64;
        let mut mi = 0.0;
        for (i, row) in self.counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let c = c as f64;
                mi += c / n * (n * c / (self.row_sums[i] as f64 * self.col_sums[j] as f64)).ln();
            }
        }
        mi.max(0.0)
    }

    pub fn row_entropy(&self) -> f64 {
        entropy(&self.row_sums, self.total as f64)
    }

    pub fn col_entropy(&self) -> f64 {
        entropy(&self.col_sums, self.total as f64)
    }

    /// True when both labelings induce the same partition.
    pub fn is_matching(&self) -> bool {
        self.row_sums.len() == self.col_sums.len()
            && self
                .counts
                .iter()
                .all(|row| row.iter().filter(|&&c| c > 0).count() == 1)
    }
}

/// NMI with arithmetic-mean normalization, in `[0, 1]`.
pub fn nmi<L: Ord + Clone>(a: &[L], b: &[L]) -> Result<f64> {
    nmi_with(a, b, NmiNormalization::Arithmetic)
}

pub fn nmi_with<L: Ord + Clone>(a: &[L], b: &[L], norm: NmiNormalization) -> Result<f64> {
    let t = contingency(a, b)?;
    let (ha, hb) = (t.row_entropy(), t.col_entropy());
    if t.is_matching() {
        return Ok(1.0);
    }
    let denom = match norm {
        NmiNormalization::Arithmetic => (ha + hb) / 2.0,
        NmiNormalization::Geometric => (ha * hb).sqrt(),
        NmiNormalization::Min => ha.min(hb),
        NmiNormalization::Max => ha.max(hb),
    };
    if denom <= 0.0 {
        return Ok(0.0);
    }
    Ok((t.mutual_information() / denom).clamp(0.0, 1.0))
}

fn pairs(c: u64) -> i128 {
    let c = c as i128;
    c * (c - 1).max(0) / 2
}

/// Adjusted Rand index. 1 for identical partitions, about 0 for chance.
///
/// Pair counts are combined in integer arithmetic so that only the final
/// quotient is rounded.
pub fn ari<L: Ord + Clone>(a: &[L], b: &[L]) -> Result<f64> {
    let t = contingency(a, b)?;
    let index: i128 = t.counts.iter().flatten().map(|&c| pairs(c)).sum();
    let sum_a: i128 = t.row_sums.iter().map(|&c| pairs(c)).sum();
    let sum_b: i128 = t.col_sums.iter().map(|&c| pairs(c)).sum();
    let all = pairs(t.total);
    let identical = t.counts.iter().flatten().filter(|&&c| c > 0).count() == t.row_sums.len()
        && t.row_sums.len() == t.col_sums.len();
    // (index - sa*sb/all) / ((sa+sb)/2 - sa*sb/all), scaled by 2*all.
    let num = 2 * (index * all - sum_a * sum_b);
    let den = (sum_a + sum_b) * all - 2 * sum_a * sum_b;
    if den == 0 {
        return Ok(if identical { 1.0 } else { 0.0 });
    }
    Ok(num as f64 / den as f64)
}
