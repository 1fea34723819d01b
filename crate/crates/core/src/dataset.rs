//! Instance store shared by every ball.
//!
//! Values are kept row-major in one flat buffer; balls hold indices into it.

use std::collections::HashMap;
use std::fs::File;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    values: Vec<T>,
    labels: Option<Vec<i64>>,
    n: usize,
    m: usize,
}

impl<T: Scalar> Dataset<T> {
    /// Builds a dataset from rows, checking shape and finiteness.
    pub fn from_rows(rows: Vec<Vec<T>>, labels: Option<Vec<i64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let m = rows[0].len();
        if m == 0 {
            return Err(Error::NoFeatures);
        }
        let mut values = Vec::with_capacity(n * m);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != m {
                return Err(Error::RaggedRow {
                    row: r,
                    found: row.len(),
                    expected: m,
                });
            }
            values.extend(row);
        }
        Self::from_flat(values, n, m, labels)
    }

    pub fn from_flat(values: Vec<T>, n: usize, m: usize, labels: Option<Vec<i64>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if m == 0 {
            return Err(Error::NoFeatures);
        }
        if values.len() != n * m {
            return Err(Error::InvalidParameter(format!(
                "buffer of {} values cannot hold {n}x{m}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / m,
                column: pos % m,
            });
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::LabelLength {
                    labels: l.len(),
                    rows: n,
                });
            }
        }
        Ok(Self { values, labels, n, m })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> + '_ {
        self.values.chunks_exact(self.m)
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn with_labels(mut self, labels: Option<Vec<i64>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != self.n {
                return Err(Error::LabelLength {
                    labels: l.len(),
                    rows: self.n,
                });
            }
        }
        self.labels = labels;
        Ok(self)
    }

    /// Z-scores every column with the population standard deviation.
    ///
    /// Columns whose spread is negligible relative to their magnitude are
    /// mapped to zeros.
    pub fn standardize(&self) -> Self {
        let n = T::from_count(self.n);
        let mut out = self.values.clone();
        for j in 0..self.m {
            let mean = self.rows().map(|r| r[j]).sum::<T>() / n;
            let var = self.rows().map(|r| (r[j] - mean) * (r[j] - mean)).sum::<T>() / n;
            let std = var.sqrt();
            let scale = T::one().max(mean.abs());
            let constant = std <= T::epsilon() * T::lit(16.0) * scale;
            for i in 0..self.n {
                out[i * self.m + j] = if constant {
                    T::zero()
                } else {
                    (self.values[i * self.m + j] - mean) / std
                };
            }
        }
        Self {
            values: out,
            labels: self.labels.clone(),
            n: self.n,
            m: self.m,
        }
    }

    /// Reads a comma-separated file of reals.
    ///
    /// Label cells may be integers, integral reals, or arbitrary tokens; tokens
    /// are numbered in order of first appearance.
    pub fn load_csv(path: &Path, has_header: bool, label_column: Option<usize>) -> Result<Self> {
        Self::load_delimited(path, b',', has_header, label_column)
    }

    pub fn read_csv<R: std::io::Read>(reader: R, has_header: bool, label_column: Option<usize>) -> Result<Self> {
        Self::read_delimited(reader, b',', has_header, label_column)
    }

    /// Like [`Dataset::load_csv`] with another single-byte separator, e.g. `b'\t'`.
    pub fn load_delimited(path: &Path, delimiter: u8, has_header: bool, label_column: Option<usize>) -> Result<Self> {
        let file = File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read_delimited(file, delimiter, has_header, label_column)
    }

    pub fn read_delimited<R: std::io::Read>(
        reader: R,
        delimiter: u8,
        has_header: bool,
        label_column: Option<usize>,
    ) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .has_headers(has_header)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);

        let mut values = Vec::new();
        let mut raw_labels = Vec::new();
        let mut width = None;
        let mut n = 0;
        for (r, record) in rdr.records().enumerate() {
            let record = record?;
            if record.iter().all(|c| c.is_empty()) {
                continue;
            }
            // 1-based data row numbers in messages, counting the header line.
            let row = r + 1 + usize::from(has_header);
            let w = *width.get_or_insert(record.len());
            if record.len() != w {
                return Err(Error::RaggedRow {
                    row,
                    found: record.len(),
                    expected: w,
                });
            }
            if let Some(lc) = label_column {
                if lc >= w {
                    return Err(Error::LabelColumnOutOfRange { column: lc, width: w });
                }
            }
            for (c, cell) in record.iter().enumerate() {
                if Some(c) == label_column {
                    raw_labels.push(cell.to_string());
                    continue;
                }
                let v: f64 = cell.parse().map_err(|_| Error::ParseCell {
                    row,
                    column: c,
                    value: cell.to_string(),
                })?;
                if !v.is_finite() {
                    return Err(Error::NonFinite { row, column: c });
                }
                values.push(T::lit(v));
            }
            n += 1;
        }
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let w = width.unwrap_or(0);
        let m = w - usize::from(label_column.is_some());
        let labels = label_column.map(|_| encode_labels(&raw_labels));
        Self::from_flat(values, n, m, labels)
    }
}

fn encode_labels(raw: &[String]) -> Vec<i64> {
    let numeric: Option<Vec<i64>> = raw
        .iter()
        .map(|s| {
            s.parse::<i64>().ok().or_else(|| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.fract() == 0.0 && v.abs() < 9.0e15)
                    .map(|v| v as i64)
            })
        })
        .collect();
    if let Some(ids) = numeric {
        return ids;
    }
    let mut seen = HashMap::new();
    raw.iter()
        .map(|s| {
            let next = seen.len() as i64;
            *seen.entry(s.as_str()).or_insert(next)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(d: &Dataset<f64>, j: usize) -> Vec<f64> {
        d.rows().map(|r| r[j]).collect()
    }

    #[test]
    fn parses_plain_numeric_file() {
        let d = Dataset::<f64>::read_csv("1,2\n3,4\n5,6\n".as_bytes(), false, None).unwrap();
        assert_eq!((d.n(), d.m()), (3, 2));
        assert!(d.labels().is_none());
        assert_eq!(d.row(2), &[5.0, 6.0]);
    }

    #[test]
    fn splits_label_column_after_header() {
        let src = "x,y,class\n0.5,1.5,1\n2.5,3.5,2\r\n";
        let d = Dataset::<f64>::read_csv(src.as_bytes(), true, Some(2)).unwrap();
        assert_eq!(d.m(), 2);
        assert_eq!(d.labels(), Some(&[1, 2][..]));
    }

    #[test]
    fn string_labels_are_numbered() {
        let src = "1,a\n2,b\n3,a\n";
        let d = Dataset::<f64>::read_csv(src.as_bytes(), false, Some(1)).unwrap();
        assert_eq!(d.labels(), Some(&[0, 1, 0][..]));
    }

    #[test]
    fn bad_cell_names_row_and_column() {
        let err = Dataset::<f64>::read_csv("1,2\n3,abc\n".as_bytes(), false, None).unwrap_err();
        match err {
            Error::ParseCell { row, column, value } => {
                assert_eq!((row, column), (2, 1));
                assert_eq!(value, "abc");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ragged_and_empty_files_fail() {
        assert!(matches!(
            Dataset::<f64>::read_csv("1,2\n3\n".as_bytes(), false, None),
            Err(Error::RaggedRow { .. })
        ));
        assert!(matches!(
            Dataset::<f64>::read_csv("x,y\n".as_bytes(), true, None),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = Dataset::<f64>::load_csv(Path::new("/nonexistent/x.csv"), false, None);
        assert!(matches!(err, Err(Error::Io { .. })));
    }

    #[test]
    fn z_score_of_two_four_six() {
        let d = Dataset::from_rows(vec![vec![2.0], vec![4.0], vec![6.0]], None).unwrap();
        let s = col(&d.standardize(), 0);
        let expected = 2.0 / (8.0_f64 / 3.0).sqrt();
        assert!((s[0] + expected).abs() < 1e-12);
        assert!(s[1].abs() < 1e-12);
        assert!((s[2] - expected).abs() < 1e-12);
        assert!((expected - 1.2247).abs() < 1e-4);
    }

    #[test]
    fn constant_column_becomes_zero() {
        let d = Dataset::from_rows(
            vec![vec![5.0, 1.0], vec![5.0, 2.0], vec![5.0, 3.0]],
            Some(vec![0, 1, 1]),
        )
        .unwrap();
        let s = d.standardize();
        assert_eq!(col(&s, 0), vec![0.0, 0.0, 0.0]);
        assert_eq!(s.labels(), Some(&[0, 1, 1][..]));
    }

    #[test]
    fn rejects_non_finite() {
        let err = Dataset::from_rows(vec![vec![1.0, f64::NAN]], None).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 0, column: 1 }));
    }

    #[test]
    fn label_length_checked() {
        let err = Dataset::from_rows(vec![vec![1.0]], Some(vec![1, 2])).unwrap_err();
        assert!(matches!(err, Error::LabelLength { .. }));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn dataset() -> impl Strategy<Value = Dataset<f64>> {
            (1usize..40, 1usize..5).prop_flat_map(|(n, m)| {
                prop::collection::vec(-1.0e3..1.0e3f64, n * m)
                    .prop_map(move |v| Dataset::from_flat(v, n, m, None).unwrap())
            })
        }

        proptest! {
            #[test]
            fn standardized_columns_have_unit_moments(d in dataset()) {
                let s = d.standardize();
                for j in 0..s.m() {
                    let c: Vec<f64> = s.rows().map(|r| r[j]).collect();
                    let (mean, std) = crate::scalar::mean_std(&c);
                    prop_assert!(mean.abs() < 1e-9);
                    prop_assert!(std == 0.0 || (std - 1.0).abs() < 1e-9);
                }
            }

            #[test]
            fn standardize_is_idempotent(d in dataset()) {
                let once = d.standardize();
                let twice = once.standardize();
                for (a, b) in once.values().iter().zip(twice.values()) {
                    prop_assert!((a - b).abs() < 1e-9);
                }
            }
        }
    }
}
